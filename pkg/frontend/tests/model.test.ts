import { describe, expect, it } from 'vitest';

import { ReviewViewModel } from '../src/model';
import { taskPayload } from './fixtures';

function completed(model: ReviewViewModel): void {
  for (const row of model.rows) {
    if (model.mergeGroups.some((g) => g.members.includes(row.principleId))) continue;
    model.setAction(row.principleId, 'keep');
    model.setConfidence(row.principleId, 2);
  }
}

describe('ReviewViewModel', () => {
  it('creates one row per active principle with submit disabled', () => {
    const model = new ReviewViewModel(taskPayload(7));
    expect(model.rows).toHaveLength(7);
    expect(model.canSubmit()).toBe(false);
    expect(model.uncovered()).toHaveLength(7);
  });

  it('rejects malformed payloads', () => {
    expect(() => new ReviewViewModel({} as never)).toThrow('malformed');
  });

  it('enables submit only when every row has action and confidence', () => {
    const model = new ReviewViewModel(taskPayload(3));
    model.setAction('p001', 'keep');
    model.setConfidence('p001', 3);
    model.setAction('p002', 'delete');
    model.setConfidence('p002', 1);
    expect(model.canSubmit()).toBe(false);
    model.setAction('p003', 'edit');
    expect(model.canSubmit()).toBe(false); // confidence still missing
    model.setConfidence('p003', 2);
    expect(model.canSubmit()).toBe(true);
  });

  it('rejects confidences outside 1..3', () => {
    const model = new ReviewViewModel(taskPayload(1));
    expect(() => model.setConfidence('p001', 0)).toThrow('{1,2,3}');
    expect(() => model.setConfidence('p001', 4)).toThrow('{1,2,3}');
  });

  it('edit rows need non-empty replacement text', () => {
    const model = new ReviewViewModel(taskPayload(1));
    model.setAction('p001', 'edit');
    model.setConfidence('p001', 2);
    model.setEditText('p001', '   ');
    expect(model.canSubmit()).toBe(false);
    model.setEditText('p001', 'tightened wording');
    expect(model.canSubmit()).toBe(true);
  });

  it('merge requires two selections and replacement text', () => {
    const model = new ReviewViewModel(taskPayload(3));
    model.toggleMergeSelect('p001');
    expect(() => model.confirmMerge('combined', 2)).toThrow('two principles');
    model.toggleMergeSelect('p002');
    expect(() => model.confirmMerge('  ', 2)).toThrow('replacement text');
    model.confirmMerge('combined rule', 3);
    expect(model.mergeGroups).toHaveLength(1);
    expect(model.mergeGroups[0]!.members).toEqual(['p001', 'p002']);
  });

  it('merged principles count as covered', () => {
    const model = new ReviewViewModel(taskPayload(3));
    model.toggleMergeSelect('p001');
    model.toggleMergeSelect('p002');
    model.confirmMerge('combined rule', 3);
    expect(model.canSubmit()).toBe(false);
    model.setAction('p003', 'keep');
    model.setConfidence('p003', 2);
    expect(model.canSubmit()).toBe(true);
  });

  it('batch wire format matches the service contract', () => {
    const model = new ReviewViewModel(taskPayload(3));
    model.toggleMergeSelect('p001');
    model.toggleMergeSelect('p002');
    model.confirmMerge('combined rule', 3);
    model.setAction('p003', 'edit');
    model.setEditText('p003', 'rewritten');
    model.setConfidence('p003', 1);
    model.addPrinciple('brand new criterion', 2);
    const batch = model.toBatch('ann-1', '2026-02-01T00:00:00Z');

    expect(batch.annotator_id).toBe('ann-1');
    expect(batch.completed_at).toBe('2026-02-01T00:00:00Z');
    expect(batch.decisions).toEqual([
      {
        action: 'merge',
        principle_id: null,
        new_text: 'combined rule',
        merged_from: ['p001', 'p002'],
        confidence: 3,
      },
      {
        action: 'edit',
        principle_id: 'p003',
        new_text: 'rewritten',
        merged_from: [],
        confidence: 1,
      },
      {
        action: 'add',
        principle_id: null,
        new_text: 'brand new criterion',
        merged_from: [],
        confidence: 2,
      },
    ]);
  });

  it('adds never carry a synthetic client id', () => {
    const model = new ReviewViewModel(taskPayload(1));
    model.setAction('p001', 'keep');
    model.setConfidence('p001', 2);
    model.addPrinciple('extra', 2);
    const batch = model.toBatch('ann-1');
    const add = batch.decisions.find((d) => d.action === 'add')!;
    expect(add.principle_id).toBeNull();
  });

  it('refuses to build an incomplete batch', () => {
    const model = new ReviewViewModel(taskPayload(2));
    model.setAction('p001', 'keep');
    model.setConfidence('p001', 2);
    expect(() => model.toBatch('ann-1')).toThrow('incomplete');
  });

  it('maps 422 diagnostics back onto rows by decision index', () => {
    const model = new ReviewViewModel(taskPayload(2));
    completed(model);
    const batch = model.toBatch('ann-1');
    model.applyDiagnostics([{ index: 1, error: 'confidence 0 not in {1, 2, 3}' }], batch);
    const target = batch.decisions[1]!.principle_id!;
    expect(model.row(target).invalid).toContain('confidence');
    expect(model.row(batch.decisions[0]!.principle_id!).invalid).toBeNull();
  });

  it('locked and conflict states disable submission', () => {
    const model = new ReviewViewModel(taskPayload(1));
    completed(model);
    expect(model.canSubmit()).toBe(true);
    model.markLocked();
    expect(model.canSubmit()).toBe(false);
    const other = new ReviewViewModel(taskPayload(1));
    completed(other);
    other.markConflict('someone else won');
    expect(other.canSubmit()).toBe(false);
    expect(other.banner).toContain('someone else');
  });

  it('deleted principles never get rows', () => {
    const payload = taskPayload(3);
    payload.bank.principles[1]!.status = 'deleted';
    const model = new ReviewViewModel(payload);
    expect(model.rows.map((r) => r.principleId)).toEqual(['p001', 'p003']);
  });
});
