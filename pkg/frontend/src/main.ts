/**
 * Entry point: wires the task list and task screens to the service.
 * Configuration is limited to the service base URL and an optional token,
 * read from query parameters with localStorage fallback.
 */

import { ReviewApiClient } from './api';
import { renderErrorPanel, renderTask, renderTaskList } from './view';

function config(): { baseUrl: string; token?: string; annotatorId: string } {
  const params = new URLSearchParams(window.location.search);
  const baseUrl =
    params.get('service') ?? localStorage.getItem('flameward.service') ?? window.location.origin;
  const token = params.get('token') ?? localStorage.getItem('flameward.token') ?? undefined;
  const annotatorId =
    params.get('annotator') ?? localStorage.getItem('flameward.annotator') ?? 'annotator';
  localStorage.setItem('flameward.service', baseUrl);
  if (token) localStorage.setItem('flameward.token', token);
  localStorage.setItem('flameward.annotator', annotatorId);
  return { baseUrl, token, annotatorId };
}

async function showList(root: HTMLElement, client: ReviewApiClient, annotatorId: string):
    Promise<void> {
  try {
    const body = await client.listTasks();
    renderTaskList(root, body.tasks, (taskId) => {
      void showTask(root, client, annotatorId, taskId);
    });
  } catch (error) {
    renderErrorPanel(root, (error as Error).message, () => {
      void showList(root, client, annotatorId);
    });
  }
}

async function showTask(
  root: HTMLElement,
  client: ReviewApiClient,
  annotatorId: string,
  taskId: string,
): Promise<void> {
  try {
    await client.claimTask(taskId, annotatorId);
    const payload = await client.getTask(taskId);
    renderTask(root, payload, client, {
      annotatorId,
      onConflict: () => {
        void showList(root, client, annotatorId);
      },
    });
  } catch (error) {
    renderErrorPanel(root, (error as Error).message, () => {
      void showTask(root, client, annotatorId, taskId);
    });
  }
}

function bootstrap(): void {
  const root = document.getElementById('app');
  if (!root) throw new Error('missing #app container');
  const { baseUrl, token, annotatorId } = config();
  const client = new ReviewApiClient({ baseUrl, token });
  void showList(root, client, annotatorId);
}

bootstrap();
