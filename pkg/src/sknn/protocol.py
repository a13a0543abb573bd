"""Three-party protocol simulation: data owner, query user, cloud server.

Actors are in-process with synchronous delivery; every exchanged message is
appended to a transcript.  A message bus seam is kept so a networked variant
can slot in later without touching the actors.
"""
from __future__ import annotations

import json
import random
from dataclasses import dataclass, field
from typing import Callable, Sequence

from . import paillier, proposed
from .errors import QueryRefused
from .serialize import ciphertext_from_hex, ciphertext_to_hex

DO, QU, CSP = "DO", "QU", "CSP"

KINDS = ("QueryRequest", "BlindedQuery", "Refusal", "CspQuery", "KnnRequest", "KnnResult")


@dataclass(frozen=True)
class Message:
    sender: str
    receiver: str
    kind: str
    payload: dict
    seq: int


@dataclass
class Transcript:
    session_id: str
    messages: list[Message] = field(default_factory=list)
    result: list[int] | None = None


class MessageBus:
    """Synchronous in-process delivery that records every message in order."""

    def __init__(self, transcript: Transcript):
        self.transcript = transcript
        self._seq = 0

    def send(self, sender: str, receiver: str, kind: str, payload: dict) -> Message:
        if kind not in KINDS:
            raise ValueError(f"unknown message kind {kind!r}")
        self._seq += 1
        msg = Message(sender, receiver, kind, payload, self._seq)
        self.transcript.messages.append(msg)
        return msg


def validate_transcript(transcript: Transcript) -> None:
    """Kinds must follow QueryRequest (Refusal | BlindedQuery CspQuery KnnRequest? KnnResult)."""
    kinds = [m.kind for m in transcript.messages]
    seqs = [m.seq for m in transcript.messages]
    if any(b <= a for a, b in zip(seqs, seqs[1:])):
        raise ValueError("sequence numbers must strictly increase")
    ok = (kinds == ["QueryRequest", "Refusal"]
          or kinds == ["QueryRequest", "BlindedQuery", "CspQuery", "KnnResult"]
          or kinds == ["QueryRequest", "BlindedQuery", "CspQuery", "KnnRequest", "KnnResult"])
    if not ok:
        raise ValueError(f"message kinds out of protocol order: {kinds}")


def simulate_session(key: proposed.OwnerKey, edb: Sequence[proposed.EncTuple],
                     query: Sequence[int], k: int, rng: random.Random,
                     policy: Callable[[proposed.QueryRequest], bool] | None = None,
                     bits: int = 256, query_bound: int | None = None) -> Transcript:
    """One full query session; the final KnnResult matches an offline csp_knn call."""
    transcript = Transcript(session_id=f"session-{rng.getrandbits(32):08x}")
    bus = MessageBus(transcript)
    bound = query_bound or key.coord_bound

    pk, sk = paillier.paillier_keygen(bits, rng)
    request = proposed.qu_build_request(query, pk, rng, bound)
    bus.send(QU, DO, "QueryRequest",
             {"ciphertexts": [ciphertext_to_hex(c) for c in request.ciphertexts],
              "n": str(pk.n)})

    try:
        blinded = proposed.do_blind_query(key, request, rng, policy=policy,
                                          query_bound=bound)
    except QueryRefused as exc:
        bus.send(DO, QU, "Refusal", {"reason": str(exc)})
        return transcript
    bus.send(DO, QU, "BlindedQuery",
             {"ciphertexts": [ciphertext_to_hex(c) for c in blinded.ciphertexts]})

    csp_query = proposed.qu_unwrap(sk, blinded)
    bus.send(QU, CSP, "CspQuery",
             {"values": [str(v) for v in csp_query.values], "k": k})

    result = proposed.csp_knn(edb, csp_query, k)
    bus.send(CSP, QU, "KnnResult", {"indices": result})
    transcript.result = result
    return transcript


def serialize_transcript(transcript: Transcript) -> str:
    """JSON lines, one message per line; deterministic byte-for-byte under a fixed seed."""
    lines = [json.dumps({"session": transcript.session_id, "seq": m.seq,
                         "sender": m.sender, "receiver": m.receiver,
                         "kind": m.kind, "payload": m.payload}, sort_keys=True)
             for m in transcript.messages]
    return "\n".join(lines) + "\n"


def parse_transcript(text: str) -> Transcript:
    messages = []
    session = ""
    for line in text.splitlines():
        if not line.strip():
            continue
        doc = json.loads(line)
        session = doc["session"]
        messages.append(Message(doc["sender"], doc["receiver"], doc["kind"],
                                doc["payload"], doc["seq"]))
    transcript = Transcript(session, messages)
    if messages and messages[-1].kind == "KnnResult":
        transcript.result = list(messages[-1].payload["indices"])
    return transcript
