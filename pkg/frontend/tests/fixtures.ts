import type { Principle, TaskPayload } from '../src/types';

export function principle(id: string, text: string, weight = 5): Principle {
  return { id, text, weight, source: 'merged', status: 'merged', contributors: [] };
}

export function taskPayload(count = 7): TaskPayload {
  const principles = Array.from({ length: count }, (_, i) =>
    principle(`p${String(i + 1).padStart(3, '0')}`, `principle ${i + 1}`),
  );
  return {
    task: {
      task_id: 'p1--a1',
      conversation_id: 'p1',
      annotator: null,
      state: 'open',
      lease_expires: 0,
    },
    conversation: {
      source_post_id: 'p1',
      target_users: ['alice', 'bob'],
      kept_comment_ids: ['c1', 'c2'],
      kept_forest: {
        post_id: 'p1',
        title: 'New balance patch discussion',
        post_body: 'Patch thoughts?',
        comments: [
          { id: 'c1', author: 'alice', body: 'This patch ruined the game.', parent_id: null, created_at: 1 },
          { id: 'c2', author: 'bob', body: 'You have no idea, idiot.', parent_id: 'c1', created_at: 2 },
        ],
      },
    },
    bank: {
      conversation_id: 'p1',
      principles,
      verification: null,
      next_id: count + 1,
    },
    submitted_record: null,
  };
}
