/**
 * DOM rendering for the review screens. No framework: render functions
 * build elements, event handlers mutate the view model and re-render. All
 * authoritative state lives on the server; this file only draws drafts.
 */

import { ConflictError, ReviewApiClient, ValidationFailure } from './api';
import { ReviewViewModel, isConfidence } from './model';
import type { CommentDoc, ConversationDoc, TaskInfo, TaskPayload } from './types';

const BODY_TRUNCATE_CHARS = 280;
const AUTHOR_COLORS = ['#2563eb', '#db2777', '#059669', '#d97706', '#7c3aed', '#dc2626'];

export function authorColor(handle: string): string {
  let hash = 0;
  for (const ch of handle) hash = (hash * 31 + ch.codePointAt(0)!) >>> 0;
  return AUTHOR_COLORS[hash % AUTHOR_COLORS.length]!;
}

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  attrs: Record<string, string> = {},
  ...children: (Node | string)[]
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  for (const [key, value] of Object.entries(attrs)) {
    if (key === 'class') node.className = value;
    else node.setAttribute(key, value);
  }
  node.append(...children);
  return node;
}

function commentDepths(comments: CommentDoc[]): Map<string, number> {
  const parent = new Map(comments.map((c) => [c.id, c.parent_id]));
  const depths = new Map<string, number>();
  for (const c of comments) {
    let depth = 0;
    let cursor = parent.get(c.id) ?? null;
    while (cursor) {
      depth += 1;
      cursor = parent.get(cursor) ?? null;
    }
    depths.set(c.id, depth);
  }
  return depths;
}

export function renderThread(conversation: ConversationDoc): HTMLElement {
  const panel = el('section', { class: 'thread-panel' });
  const forest = conversation.kept_forest;
  if (!forest) {
    panel.append(el('p', { class: 'thread-empty' }, 'No conversation attached.'));
    return panel;
  }
  panel.append(el('h2', {}, forest.title));
  if (forest.post_body) panel.append(el('p', { class: 'post-body' }, forest.post_body));
  const depths = commentDepths(forest.comments);
  for (const comment of forest.comments) {
    const depth = depths.get(comment.id) ?? 0;
    const row = el('div', {
      class: 'comment',
      style: `margin-left:${depth * 1.5}rem`,
      'data-comment-id': comment.id,
    });
    const author = el('span', { class: 'author' }, comment.author);
    author.style.color = authorColor(comment.author);
    row.append(author);

    // Long bodies collapse with expand-in-place so escalation context
    // stays visible without flooding the page.
    if (comment.body.length > BODY_TRUNCATE_CHARS) {
      const body = el('span', { class: 'body truncated' },
        comment.body.slice(0, BODY_TRUNCATE_CHARS) + '…');
      const expand = el('button', { class: 'expand', type: 'button' }, 'show more');
      expand.addEventListener('click', () => {
        body.textContent = comment.body;
        body.classList.remove('truncated');
        expand.remove();
      });
      row.append(body, expand);
    } else {
      row.append(el('span', { class: 'body' }, comment.body));
    }
    panel.append(row);
  }
  return panel;
}

function confidencePicker(current: number | null, onPick: (c: number) => void): HTMLElement {
  const wrap = el('span', { class: 'confidence-picker' });
  for (const level of [1, 2, 3]) {
    const button = el(
      'button',
      {
        type: 'button',
        class: `confidence ${current === level ? 'selected' : ''}`,
        'data-confidence': String(level),
      },
      String(level),
    );
    button.addEventListener('click', () => onPick(level));
    wrap.append(button);
  }
  return wrap;
}

export interface TaskViewHooks {
  onSubmitted?: () => void;
  onConflict?: () => void;
  annotatorId: string;
}

export function renderTask(
  container: HTMLElement,
  payload: TaskPayload,
  client: ReviewApiClient,
  hooks: TaskViewHooks,
): ReviewViewModel {
  const model = new ReviewViewModel(payload);
  draw();
  return model;

  function draw(): void {
    container.replaceChildren();
    container.append(el('h1', {}, `Task ${model.taskId}`));
    if (model.banner) {
      container.append(el('div', { class: 'banner', role: 'alert' }, model.banner));
    }
    container.append(renderThread(payload.conversation));
    container.append(renderDecisions());
    container.append(renderMergeControls());
    container.append(renderAdditions());
    container.append(renderSubmit());
  }

  function renderDecisions(): HTMLElement {
    const table = el('section', { class: 'decisions' });
    table.append(el('h2', {}, 'Principles'));
    for (const row of model.rows) {
      const merged = model.mergeGroups.some((g) => g.members.includes(row.principleId));
      const rowEl = el('div', {
        class: `decision-row ${row.invalid ? 'invalid' : ''} ${merged ? 'merged-away' : ''}`,
        'data-principle-id': row.principleId,
      });
      const select = el('input', {
        type: 'checkbox',
        class: 'merge-select',
        'aria-label': `select ${row.principleId} for merge`,
      }) as HTMLInputElement;
      select.checked = row.mergeSelected;
      select.disabled = merged || model.state !== 'drafting';
      select.addEventListener('change', () => {
        model.toggleMergeSelect(row.principleId);
        draw();
      });
      rowEl.append(select);
      rowEl.append(el('span', { class: 'weight' }, row.weight.toString()));
      rowEl.append(el('span', { class: 'principle-text' }, row.text));
      if (row.invalid) rowEl.append(el('span', { class: 'diagnostic' }, row.invalid));
      if (merged) {
        rowEl.append(el('em', {}, 'merged below'));
        table.append(rowEl);
        continue;
      }

      for (const action of ['keep', 'edit', 'delete'] as const) {
        const button = el(
          'button',
          {
            type: 'button',
            class: `action ${row.action === action ? 'selected' : ''}`,
            'data-action': action,
          },
          action,
        );
        button.addEventListener('click', () => {
          model.setAction(row.principleId, action);
          draw();
        });
        rowEl.append(button);
      }
      if (row.action === 'edit') {
        const editor = el('input', {
          type: 'text',
          class: 'edit-text',
          value: row.editText,
          'aria-label': `edited text for ${row.principleId}`,
        }) as HTMLInputElement;
        editor.addEventListener('input', () => model.setEditText(row.principleId, editor.value));
        rowEl.append(editor);
      }
      rowEl.append(
        confidencePicker(row.confidence, (c) => {
          model.setConfidence(row.principleId, c);
          draw();
        }),
      );
      table.append(rowEl);
    }
    return table;
  }

  function renderMergeControls(): HTMLElement {
    const panel = el('section', { class: 'merge-panel' });
    for (const [index, group] of model.mergeGroups.entries()) {
      const row = el(
        'div',
        { class: 'merge-group' },
        `merge of ${group.members.join(' + ')} → "${group.newText}" (confidence ${group.confidence}) `,
      );
      const undo = el('button', { type: 'button', class: 'dissolve' }, 'undo');
      undo.addEventListener('click', () => {
        model.dissolveMerge(index);
        draw();
      });
      row.append(undo);
      panel.append(row);
    }
    const selection = model.mergeSelection();
    if (selection.length >= 2) {
      const draft = el('div', { class: 'merge-draft' });
      draft.append(el('span', {}, `merging ${selection.join(' + ')}: `));
      const text = el('input', {
        type: 'text',
        class: 'merge-text',
        placeholder: 'replacement principle text',
      }) as HTMLInputElement;
      draft.append(text);
      let confidence: number | null = null;
      draft.append(
        confidencePicker(null, (c) => {
          confidence = c;
        }),
      );
      const confirm = el('button', { type: 'button', class: 'confirm-merge' }, 'merge');
      confirm.addEventListener('click', () => {
        if (!text.value.trim() || confidence === null || !isConfidence(confidence)) return;
        model.confirmMerge(text.value, confidence);
        draw();
      });
      draft.append(confirm);
      panel.append(draft);
    }
    return panel;
  }

  function renderAdditions(): HTMLElement {
    const panel = el('section', { class: 'additions' });
    for (const [index, addition] of model.additions.entries()) {
      const row = el('div', { class: 'addition' },
        `add: "${addition.text}" (confidence ${addition.confidence}) `);
      const remove = el('button', { type: 'button' }, 'remove');
      remove.addEventListener('click', () => {
        model.removeAddition(index);
        draw();
      });
      row.append(remove);
      panel.append(row);
    }
    const text = el('input', {
      type: 'text',
      class: 'add-text',
      placeholder: 'new principle',
    }) as HTMLInputElement;
    let confidence: number | null = null;
    const picker = confidencePicker(null, (c) => {
      confidence = c;
    });
    const add = el('button', { type: 'button', class: 'add-principle' }, 'add principle');
    add.addEventListener('click', () => {
      if (!text.value.trim() || confidence === null || !isConfidence(confidence)) return;
      model.addPrinciple(text.value, confidence);
      draw();
    });
    panel.append(text, picker, add);
    return panel;
  }

  function renderSubmit(): HTMLElement {
    const bar = el('section', { class: 'submit-bar' });
    const button = el('button', { type: 'button', class: 'submit' }, 'submit decisions') as
      HTMLButtonElement;
    button.disabled = !model.canSubmit();
    if (model.state === 'locked') {
      bar.append(el('div', { class: 'locked-note' }, 'Submitted. This task is locked.'));
      button.disabled = true;
    }
    button.addEventListener('click', () => {
      void submit();
    });
    bar.append(button);
    return bar;
  }

  async function submit(): Promise<void> {
    const batch = model.toBatch(hooks.annotatorId);
    model.markSubmitting();
    draw();
    try {
      await client.submitDecisions(model.taskId, batch);
      model.markLocked();
      draw();
      hooks.onSubmitted?.();
    } catch (error) {
      if (error instanceof ValidationFailure) {
        model.applyDiagnostics(error.diagnostics, batch);
        draw();
      } else if (error instanceof ConflictError) {
        model.markConflict(`Another submission won this task: ${error.message}`);
        draw();
        hooks.onConflict?.();
      } else {
        model.markConflict(`Submission failed: ${(error as Error).message}`);
        draw();
      }
    }
  }
}

export function renderErrorPanel(container: HTMLElement, message: string,
                                 retry: () => void): void {
  container.replaceChildren();
  const panel = el('div', { class: 'error-panel', role: 'alert' });
  panel.append(el('p', {}, `Could not load task: ${message}`));
  const button = el('button', { type: 'button', class: 'retry' }, 'retry');
  button.addEventListener('click', retry);
  panel.append(button);
  container.append(panel);
}

export function renderTaskList(
  container: HTMLElement,
  tasks: TaskInfo[],
  onOpen: (taskId: string) => void,
): void {
  container.replaceChildren();
  container.append(el('h1', {}, 'Review tasks'));
  const list = el('ul', { class: 'task-list' });
  for (const task of tasks) {
    const item = el('li', { 'data-task-id': task.task_id });
    const link = el('button', { type: 'button', class: 'open-task' },
      `${task.task_id} [${task.state}]`);
    link.addEventListener('click', () => onOpen(task.task_id));
    item.append(link);
    list.append(item);
  }
  container.append(list);
}
