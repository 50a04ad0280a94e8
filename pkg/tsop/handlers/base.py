"""
Abstract base class for reaction handlers.

A handler runs the body of one reaction after the join pattern has been
consumed and the object's guard released. It receives:
  handle  the live object, exposing send_state() and invoke_operation()
  args    the bound payloads, concatenated in pattern order

and returns the value handed back to the operation's invoker.
"""

from abc import ABC, abstractmethod


class ReactionHandler(ABC):

    def __init__(self, reaction, index: int):
        """
        Args:
            reaction: The Reaction this handler implements
            index:    Its declaration index (firing priority)
        """
        self.reaction = reaction
        self.index    = index
        self.name     = reaction.name

    @abstractmethod
    def fire(self, handle, args: tuple):
        """Run the reaction body; return the operation's result (or None)."""

    def _assert_arity(self, args: tuple) -> None:
        expected = len(self.reaction.bindings)
        if len(args) != expected:
            raise TypeError(f"{self.name} expects {expected} bound value(s), got {len(args)}")
