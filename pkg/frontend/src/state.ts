/**
 * Console state: the latest snapshot of every feed plus which auctions
 * are new since the previous poll. All transitions are pure functions
 * so they can be tested without a DOM or a server.
 */

import type { AuctionSnapshot, PollData } from "./api.js";

export interface PendingApproval {
  auctionId: string;
  unit: number;
  resource: string;
  price: string;
  meetsRequirements: boolean;
}

export interface ConsoleState {
  polls: number;
  auctions: PollData["auctions"];
  reservations: PollData["reservations"];
  account: PollData["account"] | null;
  resources: PollData["resources"];
  /** auction ids observed in any poll so far */
  seen: ReadonlySet<string>;
  /** auction ids that appeared for the first time in the latest poll */
  newIds: ReadonlySet<string>;
}

export function emptyState(): ConsoleState {
  return {
    polls: 0,
    auctions: [],
    reservations: [],
    account: null,
    resources: [],
    seen: new Set(),
    newIds: new Set(),
  };
}

export function applyPoll(state: ConsoleState, data: PollData): ConsoleState {
  const seen = new Set(state.seen);
  const newIds = new Set<string>();
  for (const auction of data.auctions) {
    if (!seen.has(auction.auction_id)) {
      newIds.add(auction.auction_id);
      seen.add(auction.auction_id);
    }
  }
  return {
    polls: state.polls + 1,
    auctions: data.auctions,
    reservations: data.reservations,
    account: data.account,
    resources: data.resources,
    seen,
    newIds,
  };
}

export function pendingApprovals(state: ConsoleState): PendingApproval[] {
  const pending: PendingApproval[] = [];
  for (const auction of state.auctions) {
    for (const unit of auction.units) {
      if (unit.pending_approval !== null) {
        pending.push({
          auctionId: auction.auction_id,
          unit: unit.index,
          resource: unit.pending_approval.resource,
          price: unit.pending_approval.price,
          meetsRequirements: unit.pending_approval.meets_requirements,
        });
      }
    }
  }
  return pending;
}

export function findAuction(
  state: ConsoleState,
  auctionId: string,
): AuctionSnapshot | undefined {
  return state.auctions.find((a) => a.auction_id === auctionId);
}
