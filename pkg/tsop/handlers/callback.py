"""
Handler backed by a host callable: fn(handle, *args) -> result.

Lets host code replace a DSL body, e.g. to reply to another object.
"""

from typing import Callable

from .base import ReactionHandler


class CallbackHandler(ReactionHandler):

    def __init__(self, reaction, index: int, fn: Callable):
        super().__init__(reaction, index)
        self.fn = fn

    def fire(self, handle, args: tuple):
        self._assert_arity(args)
        return self.fn(handle, *args)
