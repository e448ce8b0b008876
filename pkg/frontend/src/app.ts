import { ApiClient, ApiError } from "./api.js";
import { CaptureBuffer, normalizeKey } from "./capture.js";
import { EMPTY_REPORT_MESSAGE, renderAuthResult, renderReport } from "./render.js";
import type { KeyEventMsg } from "./types.js";

type Mode =
  | { kind: "idle" }
  | { kind: "enroll"; token: string; done: number; total: number }
  | { kind: "auth"; user: string; method: "template" | "classifier"; trials: KeyEventMsg[][]; total: number };

/** Wire the single-page UI; exported for tests, invoked on DOMContentLoaded. */
export function init(doc: Document, api = new ApiClient()): void {
  const $ = <T extends HTMLElement>(id: string) => doc.getElementById(id) as T;
  const statusEl = $("status");
  const progressEl = $("progress");
  const resultEl = $("result");
  const input = $<HTMLInputElement>("capture-input");

  let passwordKeys: string[] = [];
  let buffer: CaptureBuffer | null = null;
  let mode: Mode = { kind: "idle" };
  let busy = false;

  const setStatus = (text: string, kind = "") => {
    statusEl.textContent = text;
    statusEl.className = kind;
  };

  const drawProgress = () => {
    if (!buffer) {
      progressEl.textContent = "";
      return;
    }
    const dots = "●".repeat(buffer.progress) + "○".repeat(buffer.required - buffer.progress);
    progressEl.textContent = dots;
  };

  const refreshUsers = async () => {
    try {
      const res = await api.users();
      $("users-list").innerHTML =
        res.users.length === 0
          ? "<li><em>nobody enrolled yet</em></li>"
          : res.users.map((u) => `<li>${u.user_id} (${u.templates} templates)</li>`).join("");
    } catch {
      /* the list is cosmetic; leave as-is when unreachable */
    }
  };

  const armCapture = () => {
    buffer = new CaptureBuffer(passwordKeys);
    input.value = "";
    input.disabled = false;
    input.focus();
    drawProgress();
  };

  const finishEnrollTrial = async (events: KeyEventMsg[]) => {
    if (mode.kind !== "enroll" || busy) return;
    busy = true;
    try {
      const res = await api.enrollTrial(mode.token, events);
      mode.done = res.received;
      if (res.received >= res.required) {
        const fin = await api.enrollFinish(mode.token);
        setStatus(`enrolled ${fin.user_id} with ${fin.templates} templates`, "ok");
        mode = { kind: "idle" };
        input.disabled = true;
        await refreshUsers();
      } else {
        setStatus(`trial ${res.received}/${res.required} accepted; type the password again`);
        armCapture();
      }
    } catch (err) {
      setStatus(errText(err), "error");
      armCapture();
    } finally {
      busy = false;
    }
  };

  const finishAuthTrial = async (events: KeyEventMsg[]) => {
    if (mode.kind !== "auth" || busy) return;
    mode.trials.push(events);
    if (mode.trials.length < mode.total) {
      setStatus(`trial ${mode.trials.length}/${mode.total} captured; type again`);
      armCapture();
      return;
    }
    busy = true;
    try {
      const res = await api.authenticate(mode.user, mode.trials, mode.method);
      resultEl.innerHTML = renderAuthResult(res);
      setStatus("authentication complete");
    } catch (err) {
      setStatus(errText(err), "error");
    } finally {
      busy = false;
      mode = { kind: "idle" };
      input.disabled = true;
    }
  };

  const onCaptureComplete = (events: KeyEventMsg[]) => {
    if (mode.kind === "enroll") void finishEnrollTrial(events);
    else if (mode.kind === "auth") void finishAuthTrial(events);
  };

  input.addEventListener("keydown", (e: KeyboardEvent) => {
    e.preventDefault(); // never let password characters reach the field
    if (!buffer || e.repeat) return;
    handleFeed(normalizeKey(e.key), "down", performance.now());
  });
  input.addEventListener("keyup", (e: KeyboardEvent) => {
    e.preventDefault();
    if (!buffer) return;
    handleFeed(normalizeKey(e.key), "up", performance.now());
  });
  (doc.defaultView ?? window).addEventListener("blur", () => {
    if (buffer) {
      buffer.blur();
      if (buffer.status === "retry") setStatus(buffer.lastError, "error");
      drawProgress();
    }
  });

  const handleFeed = (key: string, action: "down" | "up", t: number) => {
    if (!buffer) return;
    const status = buffer.feed(key, action, t);
    drawProgress();
    if (status === "retry") {
      setStatus(buffer.lastError + " — try again", "error");
    } else if (status === "complete") {
      const events = buffer.events;
      buffer = null;
      input.disabled = true;
      onCaptureComplete(events);
    }
  };

  $("enroll-start").addEventListener("click", async () => {
    const user = $<HTMLInputElement>("enroll-user").value.trim();
    const trials = parseInt($<HTMLInputElement>("enroll-trials").value, 10) || 1;
    if (!user) {
      setStatus("enter a user id first", "error");
      return;
    }
    try {
      const res = await api.enrollStart(user, trials);
      mode = { kind: "enroll", token: res.token, done: 0, total: res.trials_required };
      setStatus(`enrolling ${user}: type the password (trial 1/${trials})`);
      armCapture();
    } catch (err) {
      setStatus(errText(err), "error");
    }
  });

  $("auth-start").addEventListener("click", () => {
    const user = $<HTMLInputElement>("auth-user").value.trim();
    const method = $<HTMLSelectElement>("auth-method").value as "template" | "classifier";
    const total = parseInt($<HTMLInputElement>("auth-trials").value, 10) || 1;
    if (!user) {
      setStatus("enter the claimed user id", "error");
      return;
    }
    mode = { kind: "auth", user, method, trials: [], total };
    resultEl.innerHTML = "";
    setStatus(`authenticating as ${user}: type the password (trial 1/${total})`);
    armCapture();
  });

  $("report-load").addEventListener("click", async () => {
    const view = $("report-view");
    try {
      view.innerHTML = renderReport(await api.report());
    } catch (err) {
      view.innerHTML = `<p class="empty">${
        err instanceof ApiError && err.status === 404 ? EMPTY_REPORT_MESSAGE : errText(err)
      }</p>`;
    }
  });

  void (async () => {
    try {
      passwordKeys = (await api.config()).password_keys;
      $("password-hint").textContent =
        "password keys: " + passwordKeys.map((k) => (k === "caps" ? "⇪" : k)).join(" ");
    } catch (err) {
      setStatus(errText(err), "error");
    }
    await refreshUsers();
  })();
}

function errText(err: unknown): string {
  if (err instanceof ApiError) return `${err.code}: ${err.message}`;
  return String(err);
}

if (typeof document !== "undefined" && document.getElementById("capture-input")) {
  init(document);
}
