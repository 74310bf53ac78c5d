/**
 * Response bodies as the operations API actually sends them, captured
 * from a live market run. Tests assert the console reproduces these
 * values verbatim, proving it performs no arithmetic of its own.
 */

import type { AuctionSnapshot, PollData } from "../src/api.js";

export const doneAuction: AuctionSnapshot = {
  auction_id: "console-a1",
  phase: "done",
  outcome: "AllConfirmed",
  reason: null,
  round: 3,
  rounds: 3,
  approval_mode: "auto",
  units: [
    {
      index: 0,
      state: "confirmed",
      request_price: "70.00",
      history: [
        {
          round: 1,
          request_price: "70.00",
          offers: [
            { resource: "curie3", price: "53.34", proposed_start: 300.0, meets_requirements: true },
            { resource: "atlas1", price: "67.34", proposed_start: 300.0, meets_requirements: true },
          ],
          best_offers: [],
          best_price: "53.34",
        },
        {
          round: 2,
          request_price: "53.34",
          offers: [
            { resource: "curie3", price: "38.34", proposed_start: 300.0, meets_requirements: true },
          ],
          best_offers: [],
          best_price: "38.34",
        },
      ],
      pending_approval: null,
      reservation_id: "curie3-r1",
      resource: "curie3",
      price: "38.34",
    },
  ],
};

export const pendingAuction: AuctionSnapshot = {
  auction_id: "console-a2",
  phase: "awaiting-approval",
  outcome: null,
  reason: null,
  round: 3,
  rounds: 3,
  approval_mode: "manual-best-offer-only",
  units: [
    {
      index: 0,
      state: "pending-approval",
      request_price: "10.00",
      history: [],
      pending_approval: {
        resource: "intrepid2",
        price: "25.00",
        proposed_start: 300.0,
        meets_requirements: false,
      },
      reservation_id: null,
      resource: null,
      price: null,
    },
  ],
};

export const poll: PollData = {
  auctions: [doneAuction, pendingAuction],
  reservations: [
    {
      reservation_id: "curie3-r1",
      auction_id: "console-a1",
      unit: 0,
      resource: "curie3",
      price: "38.34",
      proposed_start: 300.0,
      state: "confirmed",
    },
  ],
  account: {
    principal: "console",
    balance: "999386.56",
    entries: [
      {
        tx_id: "tx-000001",
        kind: "settlement",
        amount: "613.44",
        direction: "debit",
        reservation_id: "curie3-r1",
        timestamp: 1755172800.0,
      },
    ],
  },
  resources: [
    {
      resource_id: "curie3",
      address: ["127.0.0.1", 7701],
      last_heartbeat: 1755172800.0,
      alive: true,
      attractiveness: "16.67",
    },
    {
      resource_id: "thunder2",
      address: null,
      last_heartbeat: 1755172700.0,
      alive: false,
      attractiveness: "0.00",
    },
  ],
};
