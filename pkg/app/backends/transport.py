from abc import ABC, abstractmethod
from collections.abc import Sequence
from typing import Protocol

from app.backends.structures import NodeReply
from app.validators.structures import ProveRequest


class ProveHandler(Protocol):
    """Anything that answers prove requests: a validator node or an enclave"""

    node_id: str

    def handle_prove(self, req: ProveRequest) -> NodeReply | None: ...


class NodeTransport(ABC):
    """Reaches validator nodes by id; None means the node did not answer"""

    @property
    @abstractmethod
    def node_ids(self) -> list[str]: ...

    @abstractmethod
    def request(self, node_id: str, req: ProveRequest) -> NodeReply | None: ...

    def close(self) -> None:
        return None


class LocalNodeTransport(NodeTransport):
    """In-process delivery to handlers living in the same interpreter"""

    def __init__(self, handlers: Sequence[ProveHandler]) -> None:
        self.handlers = {handler.node_id: handler for handler in handlers}

    @property
    def node_ids(self) -> list[str]:
        return sorted(self.handlers)

    def request(self, node_id: str, req: ProveRequest) -> NodeReply | None:
        handler = self.handlers.get(node_id)
        return handler.handle_prove(req) if handler else None
