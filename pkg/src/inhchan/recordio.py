"""Record serialization: the delimited drop-record schema and raw measurements.

One row per (drop, band), as CSV with a fixed header or as JSON lines with
the same field names. Floating point is written at 6 significant digits,
which round-trips losslessly through the parsers. A separate JSON-lines
variant carries raw measurement payloads (PDP taps and beam powers) that
the flat schema cannot hold.
"""

from __future__ import annotations

import csv
import dataclasses
import json
from dataclasses import dataclass
from typing import List, Optional

import numpy as np

from .estimator import BeamSet, Pdp
from .lspgen import DropRecord
from .params import ChannelState, FrequencyBand, ParamTable

CSV_FIELDS = ("drop_id", "band_ghz", "state", "d_m", "pl_db", "sf_db",
              "ds_log10s", "asa_log10deg", "zsa_log10deg", "bc90_hz")
CSV_HEADER = ",".join(CSV_FIELDS)


class RecordSchemaError(ValueError):
    """Input does not conform to the record schema; message names the line."""


def format_sig(value: Optional[float]) -> str:
    """Render a float at 6 significant digits; None becomes the empty field."""
    if value is None:
        return ""
    return f"{value:.6g}"


def _round_sig(value: Optional[float]) -> Optional[float]:
    return None if value is None else float(f"{value:.6g}")


@dataclass(frozen=True)
class RecordRow:
    """One (drop, band) row of the wire schema."""

    drop_id: int
    band: FrequencyBand
    state: ChannelState
    d_m: float
    pl_db: float
    sf_db: float
    ds_log10s: float
    asa_log10deg: Optional[float]
    zsa_log10deg: Optional[float]
    bc90_hz: float


def rows_from_drop(drop: DropRecord) -> List[RecordRow]:
    rows = []
    for band in sorted(drop.bands, key=lambda b: b.hz):
        real = drop.bands[band]
        rows.append(RecordRow(
            drop_id=drop.drop_id, band=band, state=drop.state,
            d_m=drop.distance_m, pl_db=real.pl_db, sf_db=real.lsp.sf_db,
            ds_log10s=real.lsp.ds_log10s, asa_log10deg=real.lsp.asa_log10deg,
            zsa_log10deg=real.lsp.zsa_log10deg, bc90_hz=real.bc90_hz))
    return rows


def _row_strings(row: RecordRow) -> List[str]:
    return [str(row.drop_id), row.band.label, row.state.value,
            format_sig(row.d_m), format_sig(row.pl_db), format_sig(row.sf_db),
            format_sig(row.ds_log10s), format_sig(row.asa_log10deg),
            format_sig(row.zsa_log10deg), format_sig(row.bc90_hz)]


def write_records_csv(rows, stream) -> None:
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(CSV_FIELDS)
    for row in rows:
        writer.writerow(_row_strings(row))


def write_records_jsonl(rows, stream) -> None:
    for row in rows:
        obj = {
            "drop_id": row.drop_id,
            "band_ghz": row.band.label,
            "state": row.state.value,
            "d_m": _round_sig(row.d_m),
            "pl_db": _round_sig(row.pl_db),
            "sf_db": _round_sig(row.sf_db),
            "ds_log10s": _round_sig(row.ds_log10s),
            "asa_log10deg": _round_sig(row.asa_log10deg),
            "zsa_log10deg": _round_sig(row.zsa_log10deg),
            "bc90_hz": _round_sig(row.bc90_hz),
        }
        stream.write(json.dumps(obj) + "\n")


def write_records(rows, stream, fmt: str = "csv") -> None:
    if fmt == "csv":
        write_records_csv(rows, stream)
    elif fmt == "jsonl":
        write_records_jsonl(rows, stream)
    else:
        raise ValueError(f"unknown record format {fmt!r}")


def _parse_optional(field: str, line_no: int, name: str) -> Optional[float]:
    if field == "" or field is None:
        return None
    try:
        return float(field)
    except ValueError:
        raise RecordSchemaError(f"line {line_no}: field {name!r} is not numeric: {field!r}") from None


def _parse_required(field, line_no: int, name: str) -> float:
    value = _parse_optional(field, line_no, name)
    if value is None:
        raise RecordSchemaError(f"line {line_no}: field {name!r} must not be empty")
    return value


def _row_from_fields(fields, line_no: int) -> RecordRow:
    if len(fields) != len(CSV_FIELDS):
        raise RecordSchemaError(
            f"line {line_no}: expected {len(CSV_FIELDS)} fields, got {len(fields)}")
    named = dict(zip(CSV_FIELDS, fields))
    try:
        drop_id = int(named["drop_id"])
    except (TypeError, ValueError):
        raise RecordSchemaError(
            f"line {line_no}: drop_id is not an integer: {named['drop_id']!r}") from None
    try:
        band = FrequencyBand.from_label(str(named["band_ghz"]))
        state = ChannelState.from_label(str(named["state"]))
    except ValueError as exc:
        raise RecordSchemaError(f"line {line_no}: {exc}") from None
    return RecordRow(
        drop_id=drop_id, band=band, state=state,
        d_m=_parse_required(named["d_m"], line_no, "d_m"),
        pl_db=_parse_required(named["pl_db"], line_no, "pl_db"),
        sf_db=_parse_required(named["sf_db"], line_no, "sf_db"),
        ds_log10s=_parse_required(named["ds_log10s"], line_no, "ds_log10s"),
        asa_log10deg=_parse_optional(named["asa_log10deg"], line_no, "asa_log10deg"),
        zsa_log10deg=_parse_optional(named["zsa_log10deg"], line_no, "zsa_log10deg"),
        bc90_hz=_parse_required(named["bc90_hz"], line_no, "bc90_hz"))


def read_records_csv(stream) -> List[RecordRow]:
    reader = csv.reader(stream)
    try:
        header = next(reader)
    except StopIteration:
        raise RecordSchemaError("line 1: empty input, expected the record header") from None
    if header != list(CSV_FIELDS):
        raise RecordSchemaError(
            f"line 1: malformed header {','.join(header)!r}; expected {CSV_HEADER!r}")
    return [_row_from_fields(fields, line_no)
            for line_no, fields in enumerate(reader, start=2) if fields]


def read_records_jsonl(stream) -> List[RecordRow]:
    rows = []
    for line_no, line in enumerate(stream, start=1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise RecordSchemaError(f"line {line_no}: invalid JSON: {exc}") from None
        missing = [k for k in CSV_FIELDS if k not in obj]
        if missing:
            raise RecordSchemaError(f"line {line_no}: missing fields {missing}")
        fields = ["" if obj[k] is None else obj[k] for k in CSV_FIELDS]
        rows.append(_row_from_fields(fields, line_no))
    return rows


def read_records(path: str, fmt: str = "auto") -> List[RecordRow]:
    """Parse a record file; format sniffed from the first byte when 'auto'."""
    with open(path, "r", encoding="utf-8") as stream:
        if fmt == "auto":
            head = stream.read(1)
            stream.seek(0)
            fmt = "jsonl" if head == "{" else "csv"
        if fmt == "csv":
            return read_records_csv(stream)
        if fmt == "jsonl":
            return read_records_jsonl(stream)
        raise ValueError(f"unknown record format {fmt!r}")


@dataclass
class RawMeasurement:
    """One raw measurement: thresholdable PDP plus optional beam powers."""

    record_id: int
    band: FrequencyBand
    state: ChannelState
    d_m: float
    tx_ref_db: float
    pdp: Pdp
    beams: Optional[BeamSet]


def is_raw_record_file(path: str) -> bool:
    """True when the file is JSON lines carrying raw 'pdp' payloads."""
    with open(path, "r", encoding="utf-8") as stream:
        for line in stream:
            if not line.strip():
                continue
            if not line.lstrip().startswith("{"):
                return False
            try:
                obj = json.loads(line)
            except json.JSONDecodeError:
                return False
            return "pdp" in obj
    return False


def read_raw_records(path: str) -> List[RawMeasurement]:
    records = []
    with open(path, "r", encoding="utf-8") as stream:
        for line_no, line in enumerate(stream, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise RecordSchemaError(f"line {line_no}: invalid JSON: {exc}") from None
            try:
                pdp_obj = obj["pdp"]
                pdp = Pdp(delays_s=np.asarray(pdp_obj["delays_s"], dtype=float),
                          powers_db=np.asarray(pdp_obj["powers_db"], dtype=float),
                          noise_floor_mean_db=float(pdp_obj["noise_floor_mean_db"]))
                beams = None
                if obj.get("beams"):
                    beams = BeamSet(
                        azimuth_deg=[b["azimuth_deg"] for b in obj["beams"]],
                        zenith_deg=[b["zenith_deg"] for b in obj["beams"]],
                        powers=[b["power"] for b in obj["beams"]])
                records.append(RawMeasurement(
                    record_id=int(obj.get("record_id", line_no)),
                    band=FrequencyBand.from_label(str(obj["band_ghz"])),
                    state=ChannelState.from_label(str(obj["state"])),
                    d_m=float(obj["d_m"]),
                    tx_ref_db=float(obj.get("tx_ref_db", 0.0)),
                    pdp=pdp, beams=beams))
            except (KeyError, TypeError, ValueError) as exc:
                raise RecordSchemaError(f"line {line_no}: {exc}") from None
    return records


_TABLE_FIELD_NAMES = {f.name for f in dataclasses.fields(ParamTable)}


def load_table_overrides(path: str):
    """Parse a JSON override file mapping 'band:state' to ParamTable field values.

    Example: {"14.5:NLOS": {"pl0_db": 56.4}}. Unknown keys or fields raise.
    """
    with open(path, "r", encoding="utf-8") as stream:
        raw = json.load(stream)
    if not isinstance(raw, dict):
        raise ValueError("override file must hold a JSON object")
    overrides = {}
    for key, fields in raw.items():
        try:
            band_label, state_label = key.split(":")
        except ValueError:
            raise ValueError(f"override key {key!r} must look like '6.9:LOS'") from None
        band = FrequencyBand.from_label(band_label)
        state = ChannelState.from_label(state_label)
        if not isinstance(fields, dict):
            raise ValueError(f"override for {key!r} must be an object of field values")
        unknown = set(fields) - _TABLE_FIELD_NAMES
        if unknown:
            raise ValueError(f"override for {key!r} names unknown fields {sorted(unknown)}")
        overrides[(band, state)] = {name: float(value) for name, value in fields.items()}
    return overrides
