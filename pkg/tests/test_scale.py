import pytest

from privsense.errors import OutOfRange
from privsense.scale import PrivacyRating, as_rating


def test_labels_are_pure_functions_of_value():
    assert PrivacyRating(1).label == "Harmless"
    assert PrivacyRating(2).label == "Mostly not private"
    assert PrivacyRating(3).label == "Somewhat private"
    assert PrivacyRating(4).label == "Very private"
    assert PrivacyRating(5).label == "Extremely private"


def test_descriptions_exist_for_all_values():
    for v in range(1, 6):
        d = PrivacyRating(v).description
        assert d and d[0].isupper()
    assert "identifiers" in PrivacyRating(1).description
    assert "highly sensitive" in PrivacyRating(5).description


def test_ratings_behave_as_integers():
    assert PrivacyRating(3) + 1 == 4
    assert sorted([PrivacyRating(5), PrivacyRating(1)])[0] == 1


@pytest.mark.parametrize("bad", [0, 6, -1, 2.5, "x", None])
def test_as_rating_rejects_out_of_scale(bad):
    with pytest.raises(OutOfRange):
        as_rating(bad)


def test_as_rating_accepts_the_scale():
    assert [as_rating(v) for v in range(1, 6)] == list(PrivacyRating)
