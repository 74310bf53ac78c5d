/**
 * Pure HTML renderers. Each takes API data and returns a markup string;
 * prices, balances, and attractiveness values are inserted exactly as
 * the API sent them — the console does no arithmetic of its own.
 */

import type {
  AccountStatement,
  AuctionSnapshot,
  Reservation,
  ResourceEntry,
} from "./api.js";
import type { PendingApproval } from "./state.js";

export function escapeHtml(text: string): string {
  return text
    .replaceAll("&", "&amp;")
    .replaceAll("<", "&lt;")
    .replaceAll(">", "&gt;")
    .replaceAll('"', "&quot;")
    .replaceAll("'", "&#39;");
}

function td(value: string | number | null, cls = ""): string {
  const text = value === null ? "—" : escapeHtml(String(value));
  return cls === "" ? `<td>${text}</td>` : `<td class="${cls}">${text}</td>`;
}

export function renderAuctions(
  auctions: AuctionSnapshot[],
  newIds: ReadonlySet<string>,
): string {
  if (auctions.length === 0) {
    return `<p class="empty">No auctions yet.</p>`;
  }
  const rows = auctions
    .map((a) => {
      const fresh = newIds.has(a.auction_id) ? " new" : "";
      const units = a.units
        .map((u) => {
          const where =
            u.resource === null ? u.state : `${u.resource} @ ${u.price ?? "?"}`;
          return `unit ${u.index}: ${where}`;
        })
        .join("; ");
      return (
        `<tr class="auction${fresh}" data-auction="${escapeHtml(a.auction_id)}">` +
        td(a.auction_id) +
        td(a.phase) +
        td(a.outcome) +
        td(`${a.round}/${a.rounds}`) +
        td(a.approval_mode) +
        td(units) +
        `</tr>`
      );
    })
    .join("");
  return (
    `<table><thead><tr><th>auction</th><th>phase</th><th>outcome</th>` +
    `<th>round</th><th>approval</th><th>units</th></tr></thead>` +
    `<tbody>${rows}</tbody></table>`
  );
}

export function renderApprovals(pending: PendingApproval[]): string {
  if (pending.length === 0) {
    return `<p class="empty">Nothing awaiting approval.</p>`;
  }
  const rows = pending
    .map((p) => {
      const kind = p.meetsRequirements ? "bid" : "best offer (below your price)";
      const target = `data-auction="${escapeHtml(p.auctionId)}" data-unit="${p.unit}"`;
      return (
        `<tr>` +
        td(p.auctionId) +
        td(p.unit) +
        td(p.resource) +
        td(p.price) +
        td(kind) +
        `<td>` +
        `<button class="approve" ${target} data-decision="accept">accept</button> ` +
        `<button class="approve" ${target} data-decision="reject">reject</button>` +
        `</td></tr>`
      );
    })
    .join("");
  return (
    `<table><thead><tr><th>auction</th><th>unit</th><th>resource</th>` +
    `<th>price</th><th>kind</th><th></th></tr></thead><tbody>${rows}</tbody></table>`
  );
}

export function renderReservations(reservations: Reservation[]): string {
  if (reservations.length === 0) {
    return `<p class="empty">No reservations.</p>`;
  }
  const rows = reservations
    .map((r) => {
      const cancellable = r.state === "confirmed";
      const button = cancellable
        ? `<button class="cancel" data-reservation="${escapeHtml(r.reservation_id)}">cancel</button>`
        : "";
      return (
        `<tr>` +
        td(r.reservation_id) +
        td(r.resource) +
        td(r.unit) +
        td(r.price) +
        td(r.state) +
        `<td>${button}</td></tr>`
      );
    })
    .join("");
  return (
    `<table><thead><tr><th>reservation</th><th>resource</th><th>unit</th>` +
    `<th>price</th><th>state</th><th></th></tr></thead><tbody>${rows}</tbody></table>`
  );
}

export function renderAccount(account: AccountStatement | null): string {
  if (account === null) {
    return `<p class="empty">No account data yet.</p>`;
  }
  const entries = account.entries
    .map(
      (e) =>
        `<tr>` +
        td(e.tx_id) +
        td(e.kind) +
        td(e.direction) +
        td(e.amount, "amount") +
        td(e.reservation_id) +
        `</tr>`,
    )
    .join("");
  return (
    `<p class="balance">${escapeHtml(account.principal)}: ` +
    `<strong>${escapeHtml(account.balance)}</strong></p>` +
    `<table><thead><tr><th>tx</th><th>kind</th><th>direction</th>` +
    `<th>amount</th><th>reservation</th></tr></thead><tbody>${entries}</tbody></table>`
  );
}

export function renderResources(resources: ResourceEntry[]): string {
  if (resources.length === 0) {
    return `<p class="empty">No machines registered.</p>`;
  }
  const rows = resources
    .map(
      (r) =>
        `<tr>` +
        td(r.resource_id) +
        td(r.alive ? "alive" : "silent") +
        td(r.attractiveness, "amount") +
        `</tr>`,
    )
    .join("");
  return (
    `<table><thead><tr><th>machine</th><th>status</th>` +
    `<th>attractiveness</th></tr></thead><tbody>${rows}</tbody></table>`
  );
}
