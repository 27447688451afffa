"""Static detection of signature replay vulnerabilities in Solidity sources."""

__version__ = "0.1.0"
