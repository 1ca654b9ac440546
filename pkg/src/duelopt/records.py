"""Candidate bookkeeping: one record per prompt ever admitted to the pool.

Records are append-only; pruning marks a record removed instead of deleting
it, so a finished run can be replayed (which arms were active in which
round) from the record list alone.
"""

from __future__ import annotations

from dataclasses import dataclass


@dataclass
class PromptRecord:
    """One candidate arm: identity, content, lineage, life span."""

    arm_id: str
    text: str = ""
    latent: list[float] | None = None
    parent: str | None = None
    born_round: int = 0
    removed_round: int | None = None

    @property
    def active(self) -> bool:
        return self.removed_round is None

    def to_dict(self) -> dict:
        return {
            "arm_id": self.arm_id,
            "text": self.text,
            "latent": self.latent,
            "parent": self.parent,
            "born_round": self.born_round,
            "removed_round": self.removed_round,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "PromptRecord":
        return cls(
            arm_id=doc["arm_id"],
            text=doc.get("text", ""),
            latent=doc.get("latent"),
            parent=doc.get("parent"),
            born_round=doc.get("born_round", 0),
            removed_round=doc.get("removed_round"),
        )


class Pool:
    """Ordered collection of records with sequential id allocation.

    Active member order matches the ledger's arm order at all times; the
    engine keeps the two in lockstep (expand on admit, remove on prune).
    """

    def __init__(self):
        self.records: list[PromptRecord] = []
        self._by_id: dict[str, PromptRecord] = {}
        self._counter = 0

    def next_id(self) -> str:
        arm_id = f"p{self._counter:03d}"
        self._counter += 1
        return arm_id

    def admit(
        self,
        text: str = "",
        latent: list[float] | None = None,
        parent: str | None = None,
        born_round: int = 0,
        arm_id: str | None = None,
    ) -> PromptRecord:
        if arm_id is None:
            arm_id = self.next_id()
        elif arm_id in self._by_id:
            raise ValueError(f"arm id {arm_id!r} already admitted")
        record = PromptRecord(arm_id, text, latent, parent, born_round)
        self.records.append(record)
        self._by_id[arm_id] = record
        return record

    def get(self, arm_id: str) -> PromptRecord:
        try:
            return self._by_id[arm_id]
        except KeyError:
            raise ValueError(f"unknown arm id {arm_id!r}") from None

    def retire(self, arm_id: str, at_round: int) -> None:
        record = self.get(arm_id)
        if not record.active:
            raise ValueError(f"arm id {arm_id!r} already removed")
        record.removed_round = at_round

    def active_records(self) -> list[PromptRecord]:
        return [r for r in self.records if r.active]

    def active_at(self, t: int) -> list[PromptRecord]:
        """Records that were live during round t (for replay)."""
        return [
            r
            for r in self.records
            if r.born_round < t and (r.removed_round is None or r.removed_round >= t)
        ]

    def lineage(self, arm_id: str) -> list[str]:
        """Chain of ids from this arm back to its initial-pool ancestor."""
        chain = [arm_id]
        record = self.get(arm_id)
        while record.parent is not None:
            record = self.get(record.parent)
            chain.append(record.arm_id)
        return chain

    def to_dict(self) -> dict:
        return {"counter": self._counter, "records": [r.to_dict() for r in self.records]}

    @classmethod
    def from_dict(cls, doc: dict) -> "Pool":
        pool = cls()
        pool._counter = int(doc["counter"])
        for rec_doc in doc["records"]:
            record = PromptRecord.from_dict(rec_doc)
            pool.records.append(record)
            pool._by_id[record.arm_id] = record
        return pool
