/** Browser bootstrap: wires the queue, review views, and keyboard shortcuts
 * to the service client. All decisions and values live server-side; this
 * file only moves them between the DOM and the API. */

import { ApiError, ServiceClient } from "./api.js";
import {
    DraftStore,
    QueueCursor,
    ReviewSession,
    buildAnswerBody,
    canReject,
    freshCriteria,
    isNumericItem,
    optionIndexFromKey,
    toggleCriterion,
    type CriteriaFlags,
} from "./state.js";
import { renderHumanEval, renderMetadataView, renderQAReview } from "./render.js";
import type { Bundle, Criterion, QABundle, QueueKind } from "./types.js";

interface AppState {
    kind: QueueKind;
    cursor: QueueCursor;
    session: ReviewSession | null;
    bundle: Bundle | null;
    flags: CriteriaFlags;
    selectedOption?: number;
}

export function startApp(root: HTMLElement, client: ServiceClient, storage: Storage): void {
    const drafts = new DraftStore(storage);
    const clock = () => Date.now() / 1000;
    const state: AppState = {
        kind: "qa",
        cursor: new QueueCursor([]),
        session: null,
        bundle: null,
        flags: freshCriteria(),
    };

    const status = (message: string) => {
        const el = root.querySelector(".status");
        if (el) el.textContent = message;
    };

    async function loadQueue(kind: QueueKind): Promise<void> {
        state.kind = kind;
        const page = await client.queue(kind, { limit: 200 });
        state.cursor = new QueueCursor([...page.targets]);
        await openCurrent();
    }

    async function openCurrent(): Promise<void> {
        const target = state.cursor.current();
        const view = root.querySelector(".view") as HTMLElement;
        if (!target) {
            view.innerHTML = "<p>queue empty</p>";
            state.bundle = null;
            return;
        }
        state.bundle = await client.bundle(target);
        state.session = new ReviewSession(target, clock);
        state.flags = freshCriteria();
        state.selectedOption = undefined;
        const draft = drafts.load(target);
        if (draft?.flags) state.flags = draft.flags;
        if (draft?.selectedOption !== undefined) state.selectedOption = draft.selectedOption;
        redraw();
    }

    function redraw(): void {
        const view = root.querySelector(".view") as HTMLElement;
        if (!state.bundle) return;
        if (state.bundle.kind === "metadata") {
            view.innerHTML = renderMetadataView(state.bundle);
        } else if (state.kind === "human_eval") {
            view.innerHTML = renderHumanEval(state.bundle, { optionIndex: state.selectedOption });
        } else {
            view.innerHTML = renderQAReview(state.bundle, state.flags);
        }
        rewriteAssetUrls(view);
    }

    function rewriteAssetUrls(view: HTMLElement): void {
        view.querySelectorAll<HTMLImageElement>("img.asset").forEach((img) => {
            img.src = client.assetUrl(img.getAttribute("src") ?? "");
        });
    }

    async function submitVerdict(verdict: "accept" | "reject" | "edit"): Promise<void> {
        if (!state.session || !state.bundle) return;
        const target = state.session.target;
        try {
            if (verdict === "reject" && !canReject(state.flags)) {
                status("uncheck a criterion before rejecting");
                return;
            }
            let editedValue: unknown;
            if (verdict === "edit" && state.bundle.kind === "metadata") {
                const picked = root.querySelector<HTMLInputElement>(
                    'input[name="field-value"]:checked',
                );
                editedValue = picked?.value;
            }
            const body = state.session.buildVerdict(verdict, {
                flags: state.bundle.kind === "qa" ? state.flags : undefined,
                editedValue,
            });
            await client.submitVerdict(body);
            drafts.clear(target);
            state.cursor.markDone(target);
            status(`${verdict} recorded for ${target}`);
            await openCurrent();
        } catch (error) {
            status(error instanceof ApiError ? error.detail : String(error));
        }
    }

    async function submitAnswer(): Promise<void> {
        if (!state.bundle || state.bundle.kind !== "qa") return;
        const bundle = state.bundle as QABundle;
        try {
            const numericField = root.querySelector<HTMLInputElement>('input[name="numeric-answer"]');
            const body = buildAnswerBody(bundle.item, {
                optionIndex: state.selectedOption,
                numericValue:
                    isNumericItem(bundle.item) && numericField ? Number(numericField.value) : undefined,
            });
            await client.submitAnswer(body);
            drafts.clear(bundle.target);
            state.cursor.markDone(bundle.target);
            status(`answer recorded for ${bundle.item.item_id}`);
            await openCurrent();
        } catch (error) {
            status(error instanceof ApiError ? error.detail : String(error));
        }
    }

    root.addEventListener("click", (event) => {
        const el = event.target as HTMLElement;
        const action = el.dataset["action"];
        const option = el.dataset["option"];
        const criterion = el.dataset["criterion"] as Criterion | undefined;
        if (option !== undefined) {
            state.selectedOption = Number(option);
            saveDraft();
            redraw();
        } else if (criterion) {
            state.flags = toggleCriterion(state.flags, criterion);
            saveDraft();
            redraw();
        } else if (action === "accept" || action === "reject" || action === "edit") {
            void submitVerdict(action);
        } else if (action === "submit-answer") {
            void submitAnswer();
        } else if (action === "next") {
            state.cursor.advance();
            void openCurrent();
        } else if (action === "prev") {
            state.cursor.retreat();
            void openCurrent();
        } else if (el.dataset["queue"]) {
            void loadQueue(el.dataset["queue"] as QueueKind);
        }
    });

    document.addEventListener("keydown", (event) => {
        if (!state.bundle || state.bundle.kind !== "qa" || state.kind !== "human_eval") return;
        const options = (state.bundle as QABundle).item.options;
        if (!options) return;
        const index = optionIndexFromKey(event.key, options.length);
        if (index !== null) {
            state.selectedOption = index;
            saveDraft();
            redraw();
        }
    });

    function saveDraft(): void {
        if (!state.session) return;
        drafts.save({
            target: state.session.target,
            flags: state.flags,
            selectedOption: state.selectedOption,
        });
    }

    void loadQueue("qa");
}
