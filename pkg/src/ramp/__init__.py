"""ramp: a decentralized marketplace for compute cycles.

User agents buy time on simulated HPC resources through a combinatorial,
multi-attribute reverse auction; a banking agent settles doubly-signed
deals on an append-only ledger. Subpackages:

- rfql: request-for-quotes document model and XML serialization
- protocol: ACL messages, JSON wire codec, TCP transport
- pricing: load-driven spot pricing for resource owners
- queuesim: workload-log-backed queue/occupancy simulation
- agents: user, resource, and bank agent implementations
- runtime: virtual-time (discrete-event) and live (threaded) runtimes
- harness: registry, scenarios, experiments, metrics, ops HTTP API
"""

__version__ = "0.1.0"
