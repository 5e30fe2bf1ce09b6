"""
Fan-out collection of matching validator replies, shared by the quorum and
attested backends.
"""

from collections import Counter, defaultdict
from collections.abc import Callable

import structlog

from app.backends.errors import InsufficientQuorum
from app.backends.structures import NodeReply
from app.backends.transport import NodeTransport
from app.clock import ClockValue
from app.crypto import digest
from app.validators.errors import FrontendRejected
from app.validators.structures import ProveRequest


logger = structlog.get_logger()


def contact_order(node_ids: list[str], req: ProveRequest) -> list[str]:
    """Registry order rotated by the request digest, spreading load across nodes"""
    if not node_ids:
        return []
    start = digest(req.signing_payload())[0] % len(node_ids)
    return node_ids[start:] + node_ids[:start]


class ReplyCollector:
    """Contacts nodes until `threshold` replies agree on one clock value"""

    def __init__(
        self,
        transport: NodeTransport,
        threshold: int,
        f: int,
        reply_is_valid: Callable[[ProveRequest, NodeReply], bool],
        rtt_ticks: int,
        timeout_ticks: int,
    ) -> None:
        self.transport = transport
        self.threshold = threshold
        self.f = f
        self.reply_is_valid = reply_is_valid
        self.rtt_ticks = rtt_ticks
        self.timeout_ticks = timeout_ticks
        self.cost_ticks = 0

    def collect(
        self, req: ProveRequest, order: list[str]
    ) -> tuple[ClockValue, list[NodeReply]]:
        groups: dict[ClockValue, list[NodeReply]] = defaultdict(list)
        rejections: Counter[str] = Counter()
        details: dict[str, str] = {}
        contacted = silent = invalid = 0

        for node_id in order:
            best = max((len(g) for g in groups.values()), default=0)
            if best + len(order) - contacted < self.threshold:
                break
            contacted += 1
            reply = self.transport.request(node_id, req)
            if reply is None:
                silent += 1
                continue
            if reply.rejected:
                rejections[reply.reject_code] += 1
                details.setdefault(reply.reject_code, reply.reject_detail)
                continue
            if (
                reply.node_id != node_id
                or reply.value is None
                or not self.reply_is_valid(req, reply)
            ):
                invalid += 1
                logger.debug('Dropping invalid reply', node_id=node_id)
                continue

            group = groups[reply.value]
            group.append(reply)
            if len(group) >= self.threshold:
                self.cost_ticks = self._cost(contacted, silent)
                return reply.value, group

        self.cost_ticks = self._cost(contacted, silent)
        if rejections:
            code, count = rejections.most_common(1)[0]
            # f+1 agreeing rejections include at least one honest node
            if count >= self.f + 1 or not groups:
                raise FrontendRejected.from_code(code, details[code])

        best = max((len(g) for g in groups.values()), default=0)
        raise InsufficientQuorum(
            f'{req.kind.value}: best group {best}/{self.threshold} after '
            f'{contacted} nodes ({silent} silent, {sum(rejections.values())} '
            f'rejected, {invalid} invalid)'
        )

    def _cost(self, contacted: int, silent: int) -> int:
        # First `threshold` nodes are asked in parallel, then one more per round
        rounds = 1 + max(0, contacted - self.threshold)
        return rounds * self.rtt_ticks + silent * self.timeout_ticks
