"""Tests for coinflip_lab.models.base."""

from dataclasses import dataclass, field

from coinflip_lab.models.base import ReportModel


@dataclass
class SampleModel(ReportModel):
    name: str = ""
    value: int = 0
    _cache: dict | None = field(default=None, repr=False)


@dataclass
class NestedModel(ReportModel):
    child: SampleModel | None = None
    items: list[SampleModel] = field(default_factory=list)


def test_iter_yields_fields():
    m = SampleModel(name="test", value=42)
    assert dict(m) == {"name": "test", "value": 42}


def test_iter_excludes_private_fields():
    m = SampleModel(name="test", value=1, _cache={"key": "val"})
    assert "_cache" not in dict(m)


def test_iter_converts_nested_model():
    outer = NestedModel(child=SampleModel(name="inner", value=10))
    assert dict(outer)["child"] == {"name": "inner", "value": 10}


def test_iter_converts_list_of_models():
    outer = NestedModel(items=[SampleModel(name="a", value=1), SampleModel(name="b", value=2)])
    assert dict(outer)["items"] == [{"name": "a", "value": 1}, {"name": "b", "value": 2}]


def test_iter_preserves_plain_list_items():
    @dataclass
    class WithPlainList(ReportModel):
        coalition: list[int] = field(default_factory=list)

    assert dict(WithPlainList(coalition=[1, 4]))["coalition"] == [1, 4]


def test_iter_none_child():
    result = dict(NestedModel(child=None, items=[]))
    assert result["child"] is None
    assert result["items"] == []
