/** Wire types mirroring the review service's versioned API. */

export type Action = 'keep' | 'edit' | 'delete' | 'merge' | 'add';
export type Confidence = 1 | 2 | 3;

export interface Principle {
  id: string;
  text: string;
  weight: number;
  source: string;
  status: string;
  contributors: string[];
}

export interface Bank {
  conversation_id: string;
  principles: Principle[];
  verification: unknown;
  next_id: number;
}

export interface CommentDoc {
  id: string;
  author: string;
  body: string;
  parent_id: string | null;
  created_at: number;
}

export interface ConversationDoc {
  source_post_id?: string;
  target_users?: string[];
  kept_comment_ids?: string[];
  kept_forest?: {
    post_id: string;
    title: string;
    post_body: string;
    comments: CommentDoc[];
  };
}

export interface TaskInfo {
  task_id: string;
  conversation_id: string;
  annotator: string | null;
  state: 'open' | 'in_progress' | 'submitted';
  lease_expires: number;
}

export interface TaskPayload {
  task: TaskInfo;
  conversation: ConversationDoc;
  bank: Bank;
  submitted_record: VerificationRecord | null;
}

export interface DecisionWire {
  action: Action;
  principle_id: string | null;
  new_text: string | null;
  merged_from: string[];
  confidence: number;
}

export interface SubmissionBody {
  annotator_id: string;
  decisions: DecisionWire[];
  completed_at: string;
}

export interface VerificationRecord {
  annotator_id: string;
  decisions: DecisionWire[];
  completed_at: string;
}

export interface TaskListResponse {
  tasks: TaskInfo[];
  total: number;
  limit: number;
  offset: number;
}

export interface Diagnostic {
  index: number | null;
  error: string;
  field?: string;
}
