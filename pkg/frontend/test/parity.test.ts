/** Acceptance: a persisted event log replays into exactly the DOM the
 * live stream produced, and the clarification round-trip stays on one
 * session and unlocks the composer when it completes. */

import { describe, expect, it } from "vitest";

import {
  FakeService,
  find,
  loadFixtures,
  mountApp,
  settle,
  submitForm,
} from "./helpers.js";

const SUITE_START = performance.now();
const fixtures = loadFixtures();

const cardKinds = () =>
  [...document.querySelectorAll(".card")].map((card) =>
    card.className.replace("card card-", ""),
  );

describe("UI event parity", () => {
  it("replaying the persisted log renders the card sequence the live stream produced", async () => {
    const service = new FakeService();
    service.addSession("s-live", [], "live");
    service.scriptedTurns.set("s-live", fixtures.happy.records);

    // live: watch the turn stream in record by record
    const live = mountApp(service);
    await live.init();
    await settle();
    submitForm("form.composer", ".composer input[name=draft]", "Which units cost the most?");
    await settle();

    const liveKinds = cardKinds();
    const liveHtml = find(".transcript").outerHTML;
    expect(liveKinds).toEqual([
      "intent_assessed",
      "sql_attempt",
      "execution_result",
      "critique",
      "final_sql",
      "answer",
    ]);
    // the preview table and its data made it into the live DOM
    expect(liveHtml).toContain("<th>UnitName</th>");
    expect(liveHtml).toContain("Case Packer CP-400");

    // replay: a fresh client pulls the same session from the persisted log
    const replay = mountApp(service);
    await replay.init();
    await settle();
    const replayHtml = find(".transcript").outerHTML;
    const replayKinds = cardKinds();

    expect(replayKinds).toEqual(liveKinds);
    expect(replayHtml).toBe(liveHtml);
  });

  it("replay equality also holds for clarification and failure logs", async () => {
    for (const scenario of [fixtures.clarify_done, fixtures.failed]) {
      const service = new FakeService();
      service.addSession("s-replay", [], "seed");
      service.scriptedTurns.set("s-replay", scenario.records);

      const live = mountApp(service);
      await live.init();
      await settle();
      submitForm("form.composer", ".composer input[name=draft]", "go");
      await settle();
      const liveHtml = find(".transcript").outerHTML;

      const replay = mountApp(service);
      await replay.init();
      await settle();
      expect(find(".transcript").outerHTML).toBe(liveHtml);
    }
  });

  it("the clarification reply box posts to the same session and unlocks on completion", async () => {
    const service = new FakeService();
    service.addSession("s-clarify", fixtures.clarify_mid.records, "orders");
    // the follow-up turn's records, exactly as the real service persisted them
    service.scriptedTurns.set("s-clarify", fixtures.clarify_done.records.slice(4));

    const app = mountApp(service);
    await app.init();
    await settle();

    // the clarifying turn rendered its inline reply box
    const question = find(".card-clarification_requested .question");
    expect(question.textContent).toBe("Which year do you mean?");
    expect(find(".badge-wait").textContent).toBe("clarifying");

    let release!: () => void;
    service.turnGate = new Promise<void>((resolve) => {
      release = resolve;
    });
    submitForm("form.clarify-reply", "form.clarify-reply input[name=reply]", "2024");
    await settle();

    // posted as a normal message to the session that asked
    expect(service.posts).toEqual([{ sessionId: "s-clarify", text: "2024" }]);
    // locked while the follow-up turn runs
    expect(app.state.sending).toBe(true);
    expect(find<HTMLButtonElement>(".composer button").disabled).toBe(true);

    release();
    await settle();

    // completion unlocks the composer and retires the reply box
    expect(find<HTMLButtonElement>(".composer button").disabled).toBe(false);
    expect(document.querySelector("form.clarify-reply")).toBeNull();
    const badges = [...document.querySelectorAll(".badge")].map((b) => b.textContent);
    expect(badges).toEqual(["clarifying", "answered"]);
  });

  it("fits the acceptance time budget", () => {
    const elapsed = (performance.now() - SUITE_START) / 1000;
    expect(elapsed).toBeLessThan(60);
    console.log(`PASS ui-event-parity [${elapsed.toFixed(2)}s < 60s]`);
  });
});
