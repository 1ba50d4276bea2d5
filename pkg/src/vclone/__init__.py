"""Exact simulator and variational trainer for 1->2 photonic qubit cloning.

Subpackages:
    mesh      -- interferometer unitaries from Mach-Zehnder cells
    fock      -- multiphoton evolution via permanents and post-selection
    cloner    -- dual-rail encoding, fidelities, and the training costs
    optimizer -- Nelder-Mead with reboots, training, validation sweeps
    sampler   -- finite-statistics coincidence counting
    cli       -- experiment runner and persistence
"""

__version__ = "0.1.0"
