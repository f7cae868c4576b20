/** Client-side review state: queue cursor, criteria gating, timers, drafts.
 *
 * All logic is server-truth-first: nothing here invents values, it only
 * stages what the annotator will submit. Drafts of in-progress verdicts
 * persist in storage so long sessions survive reloads.
 */

import type {
    Criterion,
    QAItemRecord,
    Verdict,
    VerdictBody,
} from "./types.js";
import { QA_CRITERIA } from "./types.js";

export type Clock = () => number; // seconds

export interface StorageLike {
    getItem(key: string): string | null;
    setItem(key: string, value: string): void;
    removeItem(key: string): void;
}

export class MemoryStorage implements StorageLike {
    private data = new Map<string, string>();
    getItem(key: string): string | null {
        return this.data.has(key) ? (this.data.get(key) as string) : null;
    }
    setItem(key: string, value: string): void {
        this.data.set(key, value);
    }
    removeItem(key: string): void {
        this.data.delete(key);
    }
}

/** Pending-target navigation that keeps its slot as items are decided. */
export class QueueCursor {
    private position = 0;
    constructor(private targets: string[]) {}

    get length(): number {
        return this.targets.length;
    }

    current(): string | null {
        return this.targets.length ? this.targets[Math.min(this.position, this.targets.length - 1)] : null;
    }

    advance(): string | null {
        if (this.position < this.targets.length - 1) this.position += 1;
        return this.current();
    }

    retreat(): string | null {
        if (this.position > 0) this.position -= 1;
        return this.current();
    }

    /** Remove a decided target; the cursor stays on the same slot so the next
     * pending item takes its place. */
    markDone(target: string): string | null {
        const index = this.targets.indexOf(target);
        if (index >= 0) {
            this.targets.splice(index, 1);
            if (this.position > index || this.position >= this.targets.length) {
                this.position = Math.max(0, Math.min(this.position - (this.position > index ? 1 : 0), this.targets.length - 1));
            }
        }
        return this.current();
    }
}

export type CriteriaFlags = Record<Criterion, boolean>;

export function freshCriteria(): CriteriaFlags {
    return {
        answer_correct: true,
        option_unique: true,
        plausible: true,
        objects_visible: true,
    };
}

export function toggleCriterion(flags: CriteriaFlags, criterion: Criterion): CriteriaFlags {
    return { ...flags, [criterion]: !flags[criterion] };
}

/** Reject stays disabled until the annotator marks a criterion as failed. */
export function canReject(flags: CriteriaFlags): boolean {
    return QA_CRITERIA.some((criterion) => !flags[criterion]);
}

/** One open review item: the timer starts when the item opens. */
export class ReviewSession {
    readonly startedAt: number;

    constructor(
        readonly target: string,
        private readonly clock: Clock,
    ) {
        this.startedAt = clock();
    }

    buildVerdict(
        verdict: Verdict,
        options: { flags?: CriteriaFlags; editedValue?: unknown } = {},
    ): VerdictBody {
        if (verdict === "reject") {
            if (!options.flags || !canReject(options.flags)) {
                throw new Error("reject requires at least one unchecked criterion");
            }
        }
        if (verdict === "edit" && options.editedValue === undefined) {
            throw new Error("edit requires a value");
        }
        const body: VerdictBody = {
            target: this.target,
            verdict,
            started_at: this.startedAt,
            submitted_at: this.clock(),
        };
        if (options.flags) body.criterion_flags = options.flags;
        if (options.editedValue !== undefined) body.edited_value = options.editedValue;
        return body;
    }
}

export interface VerdictDraft {
    target: string;
    flags?: CriteriaFlags;
    editedValue?: unknown;
    selectedOption?: number;
    numericValue?: number;
}

export class DraftStore {
    constructor(private readonly storage: StorageLike) {}

    save(draft: VerdictDraft): void {
        this.storage.setItem(`draft:${draft.target}`, JSON.stringify(draft));
    }

    load(target: string): VerdictDraft | null {
        const raw = this.storage.getItem(`draft:${target}`);
        return raw === null ? null : (JSON.parse(raw) as VerdictDraft);
    }

    clear(target: string): void {
        this.storage.removeItem(`draft:${target}`);
    }
}

/** Keyboard shortcut: digits 1..K select answer options. */
export function optionIndexFromKey(key: string, optionCount: number): number | null {
    if (!/^[1-9]$/.test(key)) return null;
    const index = Number(key) - 1;
    return index < optionCount ? index : null;
}

export function isNumericItem(item: QAItemRecord): boolean {
    return item.answer_type === "numeric";
}

export function buildAnswerBody(
    item: QAItemRecord,
    input: { optionIndex?: number; numericValue?: number },
): { item_id: string; option_index?: number; value?: number } {
    if (isNumericItem(item)) {
        if (input.numericValue === undefined || Number.isNaN(input.numericValue)) {
            throw new Error("numeric item needs a numeric value");
        }
        return { item_id: item.item_id, value: input.numericValue };
    }
    if (input.optionIndex === undefined) {
        throw new Error("choose an option first");
    }
    return { item_id: item.item_id, option_index: input.optionIndex };
}
