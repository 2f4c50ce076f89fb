/**
 * Draft state for one review task.
 *
 * The model owns the completeness rule: submission stays disabled until
 * every active principle carries an action and a confidence in {1,2,3}
 * (membership in a confirmed merge group counts as covered). Batches are
 * drafted locally and submitted atomically; nothing here is authoritative,
 * the service state can always rebuild the view.
 */

import type {
  Action,
  Confidence,
  Diagnostic,
  Principle,
  SubmissionBody,
  TaskPayload,
} from './types';

export interface RowState {
  principleId: string;
  text: string;
  weight: number;
  action: Exclude<Action, 'merge' | 'add'> | null;
  confidence: Confidence | null;
  editText: string;
  mergeSelected: boolean;
  invalid: string | null;
}

export interface MergeGroup {
  members: string[];
  newText: string;
  confidence: Confidence;
}

export interface Addition {
  text: string;
  confidence: Confidence;
}

export type SubmissionState = 'drafting' | 'submitting' | 'locked' | 'conflict';

export function isConfidence(value: number): value is Confidence {
  return value === 1 || value === 2 || value === 3;
}

export class ReviewViewModel {
  readonly taskId: string;
  readonly conversationId: string;
  rows: RowState[];
  mergeGroups: MergeGroup[] = [];
  additions: Addition[] = [];
  state: SubmissionState = 'drafting';
  banner: string | null = null;

  constructor(payload: TaskPayload) {
    if (!payload.task || !payload.bank || !Array.isArray(payload.bank.principles)) {
      throw new Error('malformed task payload');
    }
    this.taskId = payload.task.task_id;
    this.conversationId = payload.task.conversation_id;
    this.rows = payload.bank.principles
      .filter((p: Principle) => p.status !== 'deleted')
      .map((p: Principle) => ({
        principleId: p.id,
        text: p.text,
        weight: p.weight,
        action: null,
        confidence: null,
        editText: p.text,
        mergeSelected: false,
        invalid: null,
      }));
    if (payload.task.state === 'submitted') this.state = 'locked';
  }

  row(principleId: string): RowState {
    const found = this.rows.find((r) => r.principleId === principleId);
    if (!found) throw new Error(`unknown principle ${principleId}`);
    return found;
  }

  private inMergeGroup(principleId: string): boolean {
    return this.mergeGroups.some((g) => g.members.includes(principleId));
  }

  setAction(principleId: string, action: Exclude<Action, 'merge' | 'add'>): void {
    if (this.inMergeGroup(principleId)) throw new Error('principle is part of a merge');
    const row = this.row(principleId);
    row.action = action;
    row.invalid = null;
  }

  setConfidence(principleId: string, confidence: number): void {
    if (!isConfidence(confidence)) throw new Error(`confidence ${confidence} not in {1,2,3}`);
    this.row(principleId).confidence = confidence;
  }

  setEditText(principleId: string, text: string): void {
    this.row(principleId).editText = text;
  }

  toggleMergeSelect(principleId: string): void {
    if (this.inMergeGroup(principleId)) throw new Error('already merged');
    const row = this.row(principleId);
    row.mergeSelected = !row.mergeSelected;
  }

  mergeSelection(): string[] {
    return this.rows.filter((r) => r.mergeSelected).map((r) => r.principleId);
  }

  confirmMerge(newText: string, confidence: number): void {
    const members = this.mergeSelection();
    if (members.length < 2) throw new Error('merge needs at least two principles');
    if (!newText.trim()) throw new Error('merge needs replacement text');
    if (!isConfidence(confidence)) throw new Error(`confidence ${confidence} not in {1,2,3}`);
    this.mergeGroups.push({ members, newText: newText.trim(), confidence });
    for (const id of members) {
      const row = this.row(id);
      row.mergeSelected = false;
      row.action = null;
      row.confidence = null;
    }
  }

  dissolveMerge(index: number): void {
    this.mergeGroups.splice(index, 1);
  }

  addPrinciple(text: string, confidence: number): void {
    if (!text.trim()) throw new Error('new principle needs text');
    if (!isConfidence(confidence)) throw new Error(`confidence ${confidence} not in {1,2,3}`);
    this.additions.push({ text: text.trim(), confidence });
  }

  removeAddition(index: number): void {
    this.additions.splice(index, 1);
  }

  /** Every active principle must carry an action and a confidence. */
  canSubmit(): boolean {
    if (this.state !== 'drafting') return false;
    for (const row of this.rows) {
      if (this.inMergeGroup(row.principleId)) continue;
      if (row.action === null || row.confidence === null) return false;
      if (row.action === 'edit' && !row.editText.trim()) return false;
    }
    return true;
  }

  uncovered(): string[] {
    return this.rows
      .filter(
        (r) =>
          !this.inMergeGroup(r.principleId) && (r.action === null || r.confidence === null),
      )
      .map((r) => r.principleId);
  }

  toBatch(annotatorId: string, completedAt?: string): SubmissionBody {
    if (!this.canSubmit()) {
      throw new Error(`batch incomplete: ${this.uncovered().join(', ') || 'not in drafting state'}`);
    }
    const decisions: SubmissionBody['decisions'] = [];
    for (const group of this.mergeGroups) {
      decisions.push({
        action: 'merge',
        principle_id: null,
        new_text: group.newText,
        merged_from: [...group.members],
        confidence: group.confidence,
      });
    }
    for (const row of this.rows) {
      if (this.inMergeGroup(row.principleId)) continue;
      decisions.push({
        action: row.action as Action,
        principle_id: row.principleId,
        new_text: row.action === 'edit' ? row.editText.trim() : null,
        merged_from: [],
        confidence: row.confidence as number,
      });
    }
    for (const addition of this.additions) {
      // Adds carry no id; the server assigns one.
      decisions.push({
        action: 'add',
        principle_id: null,
        new_text: addition.text,
        merged_from: [],
        confidence: addition.confidence,
      });
    }
    return {
      annotator_id: annotatorId,
      decisions,
      completed_at: completedAt ?? new Date().toISOString().replace(/\.\d+Z$/, 'Z'),
    };
  }

  /** Map per-decision diagnostics from a 422 back onto the offending rows. */
  applyDiagnostics(diagnostics: Diagnostic[], batch: SubmissionBody): void {
    this.state = 'drafting';
    for (const diag of diagnostics) {
      if (diag.index === null || diag.index === undefined) continue;
      const decision = batch.decisions[diag.index];
      if (!decision) continue;
      if (decision.principle_id) {
        const row = this.rows.find((r) => r.principleId === decision.principle_id);
        if (row) row.invalid = diag.error;
      }
    }
  }

  markSubmitting(): void {
    this.state = 'submitting';
  }

  markLocked(): void {
    this.state = 'locked';
  }

  markConflict(message: string): void {
    this.state = 'conflict';
    this.banner = message;
  }
}
