"""Market participants: bank, resource sellers, user buyers."""

from ramp.agents.bank import BankAgent, BankCore, LedgerEntry, compute_amount
from ramp.agents.resource import ResourceAgent, ResourceAgentConfig
from ramp.agents.user import AuctionConfig, UserAgent, rank_offers

__all__ = [
    "AuctionConfig",
    "BankAgent",
    "BankCore",
    "LedgerEntry",
    "ResourceAgent",
    "ResourceAgentConfig",
    "UserAgent",
    "compute_amount",
    "rank_offers",
]
