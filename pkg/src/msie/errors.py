"""Exception hierarchy.

The CLI maps the three top-level families onto exit codes:
ConfigError -> 1, DataError -> 2, NumericError -> 3.
"""


class MsieError(Exception):
    exit_code = 2


class ConfigError(MsieError):
    exit_code = 1


class DataError(MsieError):
    exit_code = 2


class NumericError(MsieError):
    exit_code = 3


class MissingColumn(DataError):
    def __init__(self, name):
        super().__init__(f"missing column: {name}")
        self.name = name


class RangeViolation(DataError):
    def __init__(self, row, field, value=None):
        super().__init__(f"row {row}: field {field!r} out of range or unparsable ({value!r})")
        self.row = row
        self.field = field
        self.value = value


class DuplicateId(DataError):
    def __init__(self, listing_id):
        super().__init__(f"duplicate id: {listing_id}")
        self.listing_id = listing_id


class EmptyTable(DataError):
    pass


class UnknownCategory(DataError):
    def __init__(self, row, value):
        super().__init__(f"row {row}: unknown POI category {value!r}")
        self.row = row
        self.value = value


class DegenerateSplit(DataError):
    pass


class AllConstant(DataError):
    pass


class FoldTooSmall(DataError):
    pass


class EmptySelection(DataError):
    pass


class EmptyVocab(DataError):
    pass


class SingleClass(DataError):
    pass


class AlignmentError(DataError):
    def __init__(self, missing, source=""):
        missing = list(missing)
        where = f" in {source}" if source else ""
        super().__init__(f"unresolved listing ids{where}: {', '.join(map(str, missing[:10]))}")
        self.missing = missing
        self.source = source


class DimensionMismatch(DataError):
    pass


class LengthMismatch(DataError):
    pass


class ConstantTarget(DataError):
    pass


class NonFinite(NumericError):
    pass
