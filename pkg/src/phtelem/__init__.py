"""Digital twin of a wireless intraoral pH telemetry system.

Subpackages cover the electrode/front-end physics model, the node firmware
signal chain, the binary telemetry protocol with a lossy-link simulator, the
host-side recorder, the post-processing engine, and report/CLI tooling.
"""

__version__ = "0.1.0"
