// @vitest-environment jsdom
import { beforeEach, describe, expect, it, vi } from 'vitest';

import { ReviewApiClient } from '../src/api';
import { renderErrorPanel, renderTask, renderTaskList, renderThread } from '../src/view';
import { taskPayload } from './fixtures';

function client(): ReviewApiClient {
  return new ReviewApiClient({ baseUrl: 'http://service.test', fetchImpl: vi.fn() });
}

let root: HTMLElement;

beforeEach(() => {
  document.body.innerHTML = '<div id="app"></div>';
  root = document.getElementById('app')!;
});

describe('renderTask', () => {
  it('shows one decision row per principle with submit disabled', () => {
    renderTask(root, taskPayload(7), client(), { annotatorId: 'ann-1' });
    expect(root.querySelectorAll('.decision-row')).toHaveLength(7);
    const submit = root.querySelector('.submit') as HTMLButtonElement;
    expect(submit.disabled).toBe(true);
  });

  it('enables submit once every row is decided', () => {
    renderTask(root, taskPayload(2), client(), { annotatorId: 'ann-1' });
    for (const row of root.querySelectorAll('.decision-row')) {
      (row.querySelector('[data-action="keep"]') as HTMLButtonElement).click();
      (document.querySelector(`[data-principle-id="${row.getAttribute('data-principle-id')}"] [data-confidence="2"]`) as HTMLButtonElement).click();
    }
    const submit = root.querySelector('.submit') as HTMLButtonElement;
    expect(submit.disabled).toBe(false);
  });

  it('edit action reveals a prefilled editor', () => {
    renderTask(root, taskPayload(1), client(), { annotatorId: 'ann-1' });
    (root.querySelector('[data-action="edit"]') as HTMLButtonElement).click();
    const editor = root.querySelector('.edit-text') as HTMLInputElement;
    expect(editor.value).toBe('principle 1');
  });

  it('selecting two rows for merge opens a composite draft with required text', () => {
    renderTask(root, taskPayload(3), client(), { annotatorId: 'ann-1' });
    (root.querySelectorAll('.merge-select')[0] as HTMLInputElement).click();
    // the view re-renders after every change; query the fresh DOM
    (root.querySelectorAll('.merge-select')[1] as HTMLInputElement).click();
    const draft = root.querySelector('.merge-draft');
    expect(draft).not.toBeNull();
    expect(draft!.querySelector('.merge-text')).not.toBeNull();

    const text = draft!.querySelector('.merge-text') as HTMLInputElement;
    text.value = 'combined';
    (draft!.querySelector('[data-confidence="3"]') as HTMLButtonElement).click();
    (draft!.querySelector('.confirm-merge') as HTMLButtonElement).click();
    expect(root.querySelectorAll('.merge-group')).toHaveLength(1);
    expect(root.querySelectorAll('.merged-away')).toHaveLength(2);
  });

  it('long comment bodies truncate with expand-in-place', () => {
    const payload = taskPayload(1);
    payload.conversation.kept_forest!.comments[0]!.body = 'x'.repeat(400);
    renderTask(root, payload, client(), { annotatorId: 'ann-1' });
    const body = root.querySelector('.body.truncated')!;
    expect(body.textContent!.length).toBeLessThan(400);
    (root.querySelector('.expand') as HTMLButtonElement).click();
    expect(root.querySelector('.body')!.textContent).toHaveLength(400);
  });

  it('thread rows are depth-indented and author-colored', () => {
    renderTask(root, taskPayload(1), client(), { annotatorId: 'ann-1' });
    const comments = root.querySelectorAll('.comment');
    expect((comments[0] as HTMLElement).style.marginLeft).toBe('0rem');
    expect((comments[1] as HTMLElement).style.marginLeft).toBe('1.5rem');
    const authors = root.querySelectorAll('.author');
    expect((authors[0] as HTMLElement).style.color).not.toBe('');
  });

  it('locked tasks render a locked note and keep submit disabled', () => {
    const payload = taskPayload(1);
    payload.task.state = 'submitted';
    renderTask(root, payload, client(), { annotatorId: 'ann-1' });
    expect(root.querySelector('.locked-note')).not.toBeNull();
    expect((root.querySelector('.submit') as HTMLButtonElement).disabled).toBe(true);
  });
});

describe('renderErrorPanel', () => {
  it('offers retry without persisting partial state', () => {
    const retry = vi.fn();
    renderErrorPanel(root, 'network down', retry);
    expect(root.querySelector('.error-panel')!.textContent).toContain('network down');
    (root.querySelector('.retry') as HTMLButtonElement).click();
    expect(retry).toHaveBeenCalledOnce();
  });
});

describe('renderTaskList', () => {
  it('lists tasks and opens on click', () => {
    const onOpen = vi.fn();
    renderTaskList(
      root,
      [
        { task_id: 'p1--a1', conversation_id: 'p1', annotator: null, state: 'open', lease_expires: 0 },
        { task_id: 'p1--a2', conversation_id: 'p1', annotator: null, state: 'open', lease_expires: 0 },
      ],
      onOpen,
    );
    const buttons = root.querySelectorAll('.open-task');
    expect(buttons).toHaveLength(2);
    (buttons[1] as HTMLButtonElement).click();
    expect(onOpen).toHaveBeenCalledWith('p1--a2');
  });
});

describe('renderThread without forest', () => {
  it('renders a placeholder', () => {
    const panel = renderThread({});
    expect(panel.textContent).toContain('No conversation');
  });
});
