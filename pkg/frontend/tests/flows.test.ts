/** Recorded-interaction flows: each test replays literal request/response
 * pairs captured from the fixture-backed service. */

import assert from "node:assert/strict";
import { test } from "node:test";

import { ApiError, ServiceClient } from "../src/api.js";
import { renderMetadataView } from "../src/render.js";
import {
    ReviewSession,
    buildAnswerBody,
    canReject,
    freshCriteria,
    toggleCriterion,
} from "../src/state.js";
import type { MetadataBundle, QABundle } from "../src/types.js";
import { loadRecorded, scriptedFetch } from "./helpers.js";

const recorded = loadRecorded();

test("metadata edit round-trips with human_verified provenance", async () => {
    const { fetch, sent } = scriptedFetch([
        recorded["bundle_metadata_before"],
        recorded["verdict_metadata_edit"],
        recorded["bundle_metadata_after"],
    ]);
    const client = new ServiceClient("http://svc", "ui-recorder", fetch);
    const target = recorded["bundle_metadata_before"].request.path.replace("/bundle/", "");

    const before = (await client.bundle(target)) as MetadataBundle;
    assert.notEqual(before.provenance, "human_verified");

    const session = new ReviewSession(target, () => 62.5);
    const editedValue = (recorded["verdict_metadata_edit"].request.body as { edited_value: string })
        .edited_value;
    await client.submitVerdict(session.buildVerdict("edit", { editedValue }));
    assert.deepEqual(
        (sent[1].body as Record<string, unknown>)["edited_value"],
        editedValue,
    );

    const after = (await client.bundle(target)) as MetadataBundle;
    assert.equal(after.current_value, editedValue);
    assert.equal(after.provenance, "human_verified");
    assert.ok(renderMetadataView(after).includes("badge-verified"));
});

test("qa reject needs an unchecked criterion; service confirms both halves", async () => {
    const { fetch } = scriptedFetch([
        recorded["verdict_reject_all_true_rejected"],
        recorded["verdict_reject_ok"],
    ]);
    const client = new ServiceClient("http://svc", "ui-recorder", fetch);
    const target = (recorded["verdict_reject_ok"].request.body as { target: string }).target;
    const session = new ReviewSession(target, () => 18.0);

    // Client-side gate mirrors the server invariant.
    const allTrue = freshCriteria();
    assert.equal(canReject(allTrue), false);
    assert.throws(() => session.buildVerdict("reject", { flags: allTrue }));

    // The recorded service response confirms the gate: all-true is a 400.
    await assert.rejects(
        () =>
            client.submitVerdict({
                target,
                verdict: "reject",
                started_at: 10.0,
                submitted_at: 15.0,
                criterion_flags: allTrue,
            }),
        (error: unknown) =>
            error instanceof ApiError && error.status === 400 && /InvariantError/.test(error.detail),
    );

    const flags = toggleCriterion(freshCriteria(), "plausible");
    const ok = await client.submitVerdict(session.buildVerdict("reject", { flags }));
    assert.equal(ok.ok, true);
});

test("human-eval answers post in the exact shape the scorer consumes", async () => {
    const { fetch, sent } = scriptedFetch([
        recorded["bundle_qa_mca"],
        recorded["answer_mca_ok"],
        recorded["answer_mca_duplicate"],
    ]);
    const client = new ServiceClient("http://svc", "ui-recorder", fetch);
    const target = recorded["bundle_qa_mca"].request.path.replace("/bundle/", "");
    const bundle = (await client.bundle(target)) as QABundle;

    const recordedBody = recorded["answer_mca_ok"].request.body as {
        item_id: string;
        option_index: number;
    };
    const body = buildAnswerBody(bundle.item, { optionIndex: recordedBody.option_index });
    const response = await client.submitAnswer(body);
    assert.deepEqual(sent[1].body, recordedBody);
    // The service echoes the scorer-ready answer-span encoding.
    assert.match(response.raw_answer, /^<answer>[A-Z]<\/answer>$/);

    await assert.rejects(
        () => client.submitAnswer(body),
        (error: unknown) => error instanceof ApiError && error.status === 409,
    );

    // Recorded at capture time: scoring the stored answer gives exact match.
    assert.equal(recorded.scoring_check.accuracy, 100.0);
    assert.equal(recorded.scoring_check.item_id, recordedBody.item_id);
});

test("numeric answers accepted for open-numeric items", async () => {
    const { fetch, sent } = scriptedFetch([
        recorded["bundle_qa_numeric"],
        recorded["answer_numeric_ok"],
    ]);
    const client = new ServiceClient("http://svc", "ui-recorder", fetch);
    const target = recorded["bundle_qa_numeric"].request.path.replace("/bundle/", "");
    const bundle = (await client.bundle(target)) as QABundle;
    const recordedBody = recorded["answer_numeric_ok"].request.body as {
        item_id: string;
        value: number;
    };
    await client.submitAnswer(buildAnswerBody(bundle.item, { numericValue: recordedBody.value }));
    assert.deepEqual(sent[1].body, recordedBody);
});
