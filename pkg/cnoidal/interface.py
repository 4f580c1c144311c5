"""
Abstract class for a Hamiltonian field equation on the periodic grid, used by
the evolution experiments.
"""

import abc

from cnoidal.models import ConservedPair, FieldState, WaveParams


class FieldModel(abc.ABC):
    """
    What an experiment needs from an evolution equation
    """

    @abc.abstractmethod
    def initial_state(self, params: WaveParams, n_points: int) -> FieldState:
        """
        The cnoidal wave `params` sampled on N points as a phase-space point
        at t = 0 (the exact solution passes through it).
        """

    @abc.abstractmethod
    def step(self, state: FieldState, dt: float) -> FieldState:
        """
        Advances `state` by one time step `dt`; raises BlowUpError on
        non-finite or runaway values.
        """

    @abc.abstractmethod
    def conserved(self, state: FieldState) -> ConservedPair:
        """The two invariants of the flow evaluated at `state`"""

    @abc.abstractmethod
    def orbital_distance(self, state: FieldState, params: WaveParams) -> float:
        """
        Infimum over the symmetry group of the energy-norm gap between
        `state` and the orbit of the wave `params`
        """
