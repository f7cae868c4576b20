/** Pure HTML renderers. Every dynamic value in the output comes straight
 * from a service response field; the snapshot tests enforce that. */

import type { Bundle, MetadataBundle, QABundle, QAItemRecord } from "./types.js";
import { QA_CRITERIA } from "./types.js";
import type { CriteriaFlags } from "./state.js";
import { canReject } from "./state.js";

export function escapeHtml(value: unknown): string {
    return String(value)
        .replaceAll("&", "&amp;")
        .replaceAll("<", "&lt;")
        .replaceAll(">", "&gt;")
        .replaceAll('"', "&quot;");
}

function assetImages(assets: string[]): string {
    return assets
        .map((ref) => `<img class="asset" src="${escapeHtml(ref)}" alt="${escapeHtml(ref)}">`)
        .join("\n");
}

export function renderMetadataView(bundle: MetadataBundle): string {
    const badge =
        bundle.provenance === "human_verified"
            ? '<span class="badge badge-verified">human_verified</span>'
            : bundle.provenance
              ? `<span class="badge">${escapeHtml(bundle.provenance)}</span>`
              : '<span class="badge badge-missing">unset</span>';
    const choices = bundle.allowed_values
        .map(
            (value) =>
                `<label><input type="radio" name="field-value" value="${escapeHtml(value)}"` +
                `${value === bundle.current_value ? " checked" : ""}> ${escapeHtml(value)}</label>`,
        )
        .join("\n");
    return `<section class="metadata-review" data-target="${escapeHtml(bundle.target)}">
<h2>${escapeHtml(bundle.scene_id)} / ${escapeHtml(bundle.field)}</h2>
<p class="current">current: <strong>${escapeHtml(bundle.current_value ?? "—")}</strong> ${badge}</p>
<p class="frames">frames: ${escapeHtml(bundle.n_frames)}</p>
<div class="assets">${assetImages(bundle.assets)}</div>
<fieldset class="choices">${choices}</fieldset>
<div class="actions">
<button data-action="accept">Accept</button>
<button data-action="edit">Save edit</button>
</div>
</section>`;
}

function optionList(item: QAItemRecord): string {
    if (!item.options) {
        return '<p class="numeric-entry"><input type="number" step="0.1" name="numeric-answer" placeholder="numeric answer"></p>';
    }
    return (
        "<ol class=\"options\">" +
        item.options
            .map(
                (option, index) =>
                    `<li><span class="key-hint">${index + 1}</span> ` +
                    `<button data-option="${index}">${escapeHtml(option)}</button></li>`,
            )
            .join("\n") +
        "</ol>"
    );
}

export function renderQAReview(bundle: QABundle, flags: CriteriaFlags): string {
    const item = bundle.item;
    const criteria = QA_CRITERIA.map(
        (criterion) =>
            `<label><input type="checkbox" data-criterion="${criterion}"` +
            `${flags[criterion] ? " checked" : ""}> ${criterion}</label>`,
    ).join("\n");
    const answerText =
        item.options !== null
            ? escapeHtml(item.options[item.answer])
            : escapeHtml(item.answer);
    const rejectDisabled = canReject(flags) ? "" : " disabled";
    return `<section class="qa-review" data-target="${escapeHtml(bundle.target)}">
<h2>${escapeHtml(item.task_id)} <small>${escapeHtml(item.ability)}</small></h2>
<p class="question">${escapeHtml(item.question)}</p>
${item.context ? `<pre class="context">${escapeHtml(item.context)}</pre>` : ""}
<div class="assets">${assetImages(bundle.assets)}</div>
${optionList(item)}
<p class="answer">recorded answer: <strong>${answerText}</strong></p>
<pre class="certificate">${escapeHtml(JSON.stringify(item.constraint_certificate))}</pre>
<fieldset class="criteria">${criteria}</fieldset>
<div class="actions">
<button data-action="accept">Accept</button>
<button data-action="reject"${rejectDisabled}>Reject</button>
<button data-action="edit">Edit</button>
</div>
</section>`;
}

export function renderHumanEval(
    bundle: QABundle,
    selected: { optionIndex?: number; numericValue?: number },
): string {
    const item = bundle.item;
    const chosen =
        selected.optionIndex !== undefined
            ? `<p class="chosen">selected: option ${selected.optionIndex + 1}</p>`
            : selected.numericValue !== undefined
              ? `<p class="chosen">entered: ${escapeHtml(selected.numericValue)}</p>`
              : "";
    // The ground-truth answer is deliberately not rendered here.
    return `<section class="human-eval" data-target="${escapeHtml(bundle.target)}">
<h2>${escapeHtml(item.task_id)}</h2>
<p class="question">${escapeHtml(item.question)}</p>
<div class="assets">${assetImages(bundle.assets)}</div>
${optionList(item)}
${chosen}
<div class="actions"><button data-action="submit-answer">Submit</button></div>
</section>`;
}

export function renderBundle(bundle: Bundle, flags: CriteriaFlags): string {
    return bundle.kind === "metadata"
        ? renderMetadataView(bundle)
        : renderQAReview(bundle, flags);
}
