/** Thin typed client over the verification service HTTP API. */

import type { AnswerBody, Bundle, QcStats, QueueKind, QueuePage, VerdictBody } from "./types.js";

export type FetchLike = (url: string, init?: {
    method?: string;
    headers?: Record<string, string>;
    body?: string;
}) => Promise<{ status: number; json(): Promise<unknown>; text(): Promise<string> }>;

export class ApiError extends Error {
    constructor(
        public readonly status: number,
        public readonly detail: string,
    ) {
        super(`HTTP ${status}: ${detail}`);
    }
}

export interface QueueOptions {
    offset?: number;
    limit?: number;
    task_id?: string;
    scene_id?: string;
    source?: string;
}

export class ServiceClient {
    constructor(
        private readonly baseUrl: string,
        private readonly annotatorId: string,
        private readonly fetchImpl: FetchLike,
    ) {}

    private headers(json = false): Record<string, string> {
        const h: Record<string, string> = { "X-Annotator-Id": this.annotatorId };
        if (json) h["Content-Type"] = "application/json";
        return h;
    }

    private async unwrap<T>(promise: Promise<{ status: number; json(): Promise<unknown> }>): Promise<T> {
        const response = await promise;
        const body = (await response.json()) as Record<string, unknown>;
        if (response.status >= 400) {
            throw new ApiError(response.status, String(body["detail"] ?? "unknown error"));
        }
        return body as T;
    }

    queue(kind: QueueKind, options: QueueOptions = {}): Promise<QueuePage> {
        const params = new URLSearchParams({ kind });
        for (const [key, value] of Object.entries(options)) {
            if (value !== undefined) params.set(key, String(value));
        }
        return this.unwrap<QueuePage>(
            this.fetchImpl(`${this.baseUrl}/queue?${params.toString()}`, { headers: this.headers() }),
        );
    }

    bundle(target: string): Promise<Bundle> {
        return this.unwrap<Bundle>(
            this.fetchImpl(`${this.baseUrl}/bundle/${target}`, { headers: this.headers() }),
        );
    }

    submitVerdict(body: VerdictBody): Promise<{ ok: boolean; seconds_spent: number }> {
        return this.unwrap(
            this.fetchImpl(`${this.baseUrl}/verdict`, {
                method: "POST",
                headers: this.headers(true),
                body: JSON.stringify(body),
            }),
        );
    }

    submitAnswer(body: AnswerBody): Promise<{ ok: boolean; raw_answer: string }> {
        return this.unwrap(
            this.fetchImpl(`${this.baseUrl}/answer`, {
                method: "POST",
                headers: this.headers(true),
                body: JSON.stringify(body),
            }),
        );
    }

    stats(): Promise<QcStats> {
        return this.unwrap<QcStats>(
            this.fetchImpl(`${this.baseUrl}/stats`, { headers: this.headers() }),
        );
    }

    assetUrl(ref: string): string {
        return ref.startsWith("/assets/") ? `${this.baseUrl}${ref}` : `${this.baseUrl}/assets/${ref}`;
    }
}
