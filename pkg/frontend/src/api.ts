/**
 * Typed client for the marketplace operations API.
 *
 * Every value shown in the console comes verbatim from these responses;
 * the client never derives prices, balances, or attractiveness itself.
 */

export interface OfferView {
  resource: string;
  price: string;
  proposed_start: number;
  meets_requirements: boolean;
}

export interface RoundHistory {
  round: number;
  request_price: string;
  offers: OfferView[];
  best_offers: OfferView[];
  best_price: string | null;
}

export interface UnitSnapshot {
  index: number;
  state: string;
  request_price: string;
  history: RoundHistory[];
  pending_approval: OfferView | null;
  reservation_id: string | null;
  resource: string | null;
  price: string | null;
}

export interface AuctionSnapshot {
  auction_id: string;
  phase: string;
  outcome: string | null;
  reason: string | null;
  round: number;
  rounds: number;
  approval_mode: string;
  units: UnitSnapshot[];
}

export interface Reservation {
  reservation_id: string;
  auction_id: string;
  unit: number;
  resource: string;
  price: string;
  proposed_start: number;
  state: string;
}

export interface LedgerEntryView {
  tx_id: string;
  kind: string;
  amount: string;
  direction: "debit" | "credit";
  reservation_id: string;
  timestamp: number;
}

export interface AccountStatement {
  principal: string;
  balance: string;
  entries: LedgerEntryView[];
}

export interface ResourceEntry {
  resource_id: string;
  address: [string, number] | null;
  last_heartbeat: number;
  alive: boolean;
  attractiveness: string | null;
}

export interface AuctionConfig {
  rounds?: number;
  round_interval?: number;
  approval_mode?: "auto" | "manual-all" | "manual-best-offer-only";
  accept_timeout?: number;
  confirm_timeout?: number;
  confirm_retry_interval?: number;
}

/** Everything one polling pass needs. */
export interface PollData {
  auctions: AuctionSnapshot[];
  reservations: Reservation[];
  account: AccountStatement;
  resources: ResourceEntry[];
}

export interface Client {
  base: string;
  principal: string;
}

export class OpsError extends Error {
  constructor(public status: number, message: string) {
    super(message);
    this.name = "OpsError";
  }
}

async function request<T>(
  client: Client,
  method: "GET" | "POST",
  path: string,
  body?: unknown,
): Promise<T> {
  const response = await fetch(client.base + path, {
    method,
    headers: body === undefined ? {} : { "Content-Type": "application/json" },
    body: body === undefined ? undefined : JSON.stringify(body),
  });
  const payload: unknown = await response.json();
  if (!response.ok) {
    const message =
      typeof payload === "object" && payload !== null && "error" in payload
        ? String((payload as { error: unknown }).error)
        : response.statusText;
    throw new OpsError(response.status, message);
  }
  return payload as T;
}

export async function listAuctions(client: Client): Promise<AuctionSnapshot[]> {
  const data = await request<{ auctions: AuctionSnapshot[] }>(client, "GET", "/auctions");
  return data.auctions;
}

export async function getAuction(client: Client, auctionId: string): Promise<AuctionSnapshot> {
  return request(client, "GET", `/auctions/${encodeURIComponent(auctionId)}`);
}

export async function startAuction(
  client: Client,
  rfql: string,
  config: AuctionConfig = {},
): Promise<string> {
  const data = await request<{ auction_id: string }>(client, "POST", "/auctions", {
    rfql,
    config,
  });
  return data.auction_id;
}

export async function approve(
  client: Client,
  auctionId: string,
  unit: number,
  decision: "accept" | "reject",
): Promise<void> {
  await request(
    client,
    "POST",
    `/auctions/${encodeURIComponent(auctionId)}/units/${unit}/approve`,
    { decision },
  );
}

export async function listReservations(client: Client): Promise<Reservation[]> {
  const data = await request<{ reservations: Reservation[] }>(client, "GET", "/reservations");
  return data.reservations;
}

export async function cancelReservation(client: Client, reservationId: string): Promise<void> {
  await request(client, "POST", `/reservations/${encodeURIComponent(reservationId)}/cancel`);
}

export async function getAccount(client: Client, principal: string): Promise<AccountStatement> {
  return request(client, "GET", `/accounts/${encodeURIComponent(principal)}`);
}

export async function listResources(client: Client): Promise<ResourceEntry[]> {
  const data = await request<{ resources: ResourceEntry[] }>(client, "GET", "/resources");
  return data.resources;
}

/** One polling pass: the four read endpoints, fetched together. */
export async function pollAll(client: Client): Promise<PollData> {
  const [auctions, reservations, account, resources] = await Promise.all([
    listAuctions(client),
    listReservations(client),
    getAccount(client, client.principal),
    listResources(client),
  ]);
  return { auctions, reservations, account, resources };
}
