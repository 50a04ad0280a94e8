"""
Handler that interprets a reaction body written in the DSL.

Executes the body's self-sends in order: state messages go through
send_state(), operation messages through invoke_operation() (which may block).
The optional trailing `return x` yields the bound value of x.
"""

import logging

from ..spec import MessageKind
from .base import ReactionHandler

logger = logging.getLogger(__name__)


class ActionHandler(ReactionHandler):

    def fire(self, handle, args: tuple):
        self._assert_arity(args)
        env = dict(zip(self.reaction.bindings, args))

        for send in self.reaction.body:
            values = tuple(env[a] for a in send.args)
            if handle.spec.message(send.tag).kind is MessageKind.STATE:
                handle.send_state(send.tag, *values)
            else:
                handle.invoke_operation(send.tag, *values)
            logger.debug("%s sent %s%s", self.name, send.tag, values)

        if self.reaction.returns is not None:
            return env[self.reaction.returns]
        return None
