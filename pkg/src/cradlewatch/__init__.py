"""Desk-scale baby-surveillance hub.

Simulated devices stream newline-delimited JSON telemetry over TCP; the hub
folds every event through a deterministic rules engine, keeps daily counters,
tracks the baby via RFID zone events and gated GPS fixes, and serves state,
counters, and a live alert stream to a guardian dashboard over HTTP.
"""

__version__ = "0.1.0"
