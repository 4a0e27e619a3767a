"""Post-update invariants over seeded random cases (a smaller sweep than
the acceptance run)."""
import pytest

from props import update_case


@pytest.mark.parametrize("rejecting", [False, True])
def test_update_invariants_hold(rejecting):
    seen = set()
    for seed in range(300):
        for name, ok in update_case(seed, rejecting) or []:
            assert ok, f"{name} failed for seed {seed}"
            seen.add(name)
    assert "consistency" in seen and "delete-effective" in seen
    if rejecting:
        assert "rejection-purity" in seen
    else:
        assert "insert-effective" in seen and "degree-reset" in seen
