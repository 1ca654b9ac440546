import pytest

from duelopt.records import Pool, PromptRecord


def test_sequential_ids():
    pool = Pool()
    a = pool.admit(text="one")
    b = pool.admit(text="two")
    assert (a.arm_id, b.arm_id) == ("p000", "p001")


def test_admit_explicit_id_and_collision():
    pool = Pool()
    pool.admit(arm_id="p007", text="x")
    with pytest.raises(ValueError):
        pool.admit(arm_id="p007")
    # explicit ids don't advance the counter
    assert pool.admit(text="y").arm_id == "p000"


def test_get_unknown():
    with pytest.raises(ValueError):
        Pool().get("p999")


def test_retire_marks_without_deleting():
    pool = Pool()
    rec = pool.admit(text="x")
    pool.admit(text="y")
    pool.retire(rec.arm_id, at_round=4)
    assert not rec.active and rec.removed_round == 4
    assert [r.arm_id for r in pool.active_records()] == ["p001"]
    assert len(pool.records) == 2  # retirement keeps the record for replay
    with pytest.raises(ValueError):
        pool.retire(rec.arm_id, at_round=5)


def test_active_at_round_window():
    pool = Pool()
    initial = pool.admit(text="i", born_round=0)
    child = pool.admit(text="c", born_round=3)
    pool.retire(initial.arm_id, at_round=3)
    # initial alive through round 3 (retired at the round-3 boundary), child from round 4
    assert [r.arm_id for r in pool.active_at(1)] == [initial.arm_id]
    assert [r.arm_id for r in pool.active_at(3)] == [initial.arm_id]
    assert [r.arm_id for r in pool.active_at(4)] == [child.arm_id]


def test_lineage_chain():
    pool = Pool()
    root = pool.admit(text="root")
    kid = pool.admit(text="kid", parent=root.arm_id)
    grandkid = pool.admit(text="gk", parent=kid.arm_id)
    assert pool.lineage(grandkid.arm_id) == ["p002", "p001", "p000"]
    assert pool.lineage(root.arm_id) == ["p000"]


def test_round_trip():
    pool = Pool()
    pool.admit(text="a", latent=[0.1, -0.2], born_round=0)
    kid = pool.admit(text="b", parent="p000", born_round=2)
    pool.retire(kid.arm_id, at_round=5)
    restored = Pool.from_dict(pool.to_dict())
    assert [r.to_dict() for r in restored.records] == [r.to_dict() for r in pool.records]
    assert restored.next_id() == "p002"


def test_record_from_dict_defaults():
    rec = PromptRecord.from_dict({"arm_id": "p001"})
    assert rec.text == "" and rec.latent is None and rec.active
