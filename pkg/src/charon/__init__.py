"""Certified compilation of CharonLang to CharonIR with prime-power certificates."""

__version__ = "0.1.0"
