import dataclasses
from dataclasses import dataclass


@dataclass
class ReportModel:
    def __iter__(self):
        """Yield (name, value) pairs for all public fields.

        Fields whose name starts with an underscore carry in-memory helpers and are skipped.
        Nested ReportModel instances are recursively converted to dicts, so ``dict(model)``
        produces a complete, serializable representation.
        """
        for f in dataclasses.fields(self):
            if f.name.startswith("_"):
                continue
            value = getattr(self, f.name)
            if isinstance(value, ReportModel):
                value = dict(value)
            elif isinstance(value, list):
                value = [dict(item) if isinstance(item, ReportModel) else item for item in value]
            yield f.name, value
