/**
 * Browser entry point: poll the operations API once a second (never
 * with two requests in flight), render each feed, and wire the
 * approve/reject and cancel buttons back to the API.
 */

import {
  approve,
  cancelReservation,
  pollAll,
  startAuction,
  type Client,
} from "./api.js";
import { renderAccount, renderApprovals, renderAuctions, renderReservations, renderResources } from "./render.js";
import { applyPoll, emptyState, pendingApprovals, type ConsoleState } from "./state.js";

const POLL_INTERVAL_MS = 1000;

function section(id: string): HTMLElement {
  const el = document.getElementById(id);
  if (el === null) {
    throw new Error(`missing #${id} in index.html`);
  }
  return el;
}

function draw(state: ConsoleState): void {
  section("auctions").innerHTML = renderAuctions(state.auctions, state.newIds);
  section("approvals").innerHTML = renderApprovals(pendingApprovals(state));
  section("reservations").innerHTML = renderReservations(state.reservations);
  section("account").innerHTML = renderAccount(state.account);
  section("resources").innerHTML = renderResources(state.resources);
}

function showError(err: unknown): void {
  section("status").textContent = err instanceof Error ? err.message : String(err);
}

export function startConsole(client: Client): void {
  let state = emptyState();
  let inFlight = false;

  const poll = async (): Promise<void> => {
    if (inFlight) {
      return;
    }
    inFlight = true;
    try {
      state = applyPoll(state, await pollAll(client));
      section("status").textContent = `poll #${state.polls}`;
      draw(state);
    } catch (err) {
      showError(err);
    } finally {
      inFlight = false;
    }
  };

  document.addEventListener("click", (event) => {
    const el = event.target;
    if (!(el instanceof HTMLButtonElement)) {
      return;
    }
    const act = async (): Promise<void> => {
      if (el.classList.contains("approve")) {
        const auction = el.dataset["auction"] ?? "";
        const unit = Number(el.dataset["unit"] ?? "0");
        const decision = el.dataset["decision"] === "accept" ? "accept" : "reject";
        await approve(client, auction, unit, decision);
      } else if (el.classList.contains("cancel")) {
        await cancelReservation(client, el.dataset["reservation"] ?? "");
      } else {
        return;
      }
      await poll();
    };
    act().catch(showError);
  });

  const form = document.getElementById("new-auction");
  if (form instanceof HTMLFormElement) {
    form.addEventListener("submit", (event) => {
      event.preventDefault();
      const rfql = new FormData(form).get("rfql");
      if (typeof rfql === "string" && rfql.trim() !== "") {
        startAuction(client, rfql)
          .then(() => poll())
          .catch(showError);
      }
    });
  }

  void poll();
  setInterval(() => void poll(), POLL_INTERVAL_MS);
}

declare global {
  interface Window {
    RAMP_OPS_URL?: string;
    RAMP_PRINCIPAL?: string;
  }
}

if (typeof document !== "undefined" && document.getElementById("auctions") !== null) {
  startConsole({
    base: window.RAMP_OPS_URL ?? "http://127.0.0.1:8080",
    principal: window.RAMP_PRINCIPAL ?? "console",
  });
}
