"""Cognitive-radio PUE-attack detection and defense simulator.

Subpackages:
    radio     propagation, noise, and the sensing front-end
    detector  three-threshold fast energy detection
    verifier  fingerprint-based Bayesian location verification
    fusion    base-station fusion center and the global database
    markov    saturation/outage occupancy chain analytics
    netsim    discrete-event network simulator with admission control
    presets   pinned experiment calibrations
    cli       experiment runner producing CSV tables and plot scripts
"""

__version__ = "0.1.0"
