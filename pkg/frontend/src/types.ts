/** Payload shapes mirroring the verification service wire contract. */

export type QueueKind = "metadata" | "qa" | "human_eval";

export interface QueuePage {
    kind: string;
    total: number;
    offset: number;
    targets: string[];
}

export interface MetadataBundle {
    target: string;
    kind: "metadata";
    scene_id: string;
    field: string;
    current_value: string | null;
    provenance: string | null;
    allowed_values: string[];
    n_frames: number;
    assets: string[];
}

export interface QAItemRecord {
    item_id: string;
    task_id: string;
    ability: string;
    question: string;
    prompt: string;
    asset_refs: string[];
    options: string[] | null;
    answer: number;
    answer_type: "option" | "numeric";
    scene_id: string;
    frame_span: [number, number];
    constraint_certificate: Record<string, unknown>;
    rng_seed: number;
    context: string;
}

export interface GraphSliceEdge {
    kind: string;
    src: [number, number];
    dst: [number, number];
    label: string;
}

export interface QABundle {
    target: string;
    kind: "qa";
    item: QAItemRecord;
    assets: string[];
    scene_summary: { scene_id: string; source: string | null; n_frames: number | null };
    graph_slice?: GraphSliceEdge[];
}

export type Bundle = MetadataBundle | QABundle;

export const QA_CRITERIA = [
    "answer_correct",
    "option_unique",
    "plausible",
    "objects_visible",
] as const;
export type Criterion = (typeof QA_CRITERIA)[number];

export type Verdict = "accept" | "reject" | "edit";

export interface VerdictBody {
    target: string;
    verdict: Verdict;
    started_at: number;
    submitted_at: number;
    criterion_flags?: Record<Criterion, boolean>;
    edited_value?: unknown;
}

export interface AnswerBody {
    item_id: string;
    option_index?: number;
    value?: number;
}

export interface QcStats {
    decided: number;
    accepted: number;
    rejected: number;
    edited: number;
    pass_rate_strict: number | null;
    pass_rate_with_edits: number | null;
    criterion_rejections: Record<string, number>;
    total_annotator_seconds: number;
    n_verdicts: number;
    n_answers: number;
}
