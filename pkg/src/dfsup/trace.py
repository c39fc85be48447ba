"""Per-iteration run records and their CSV form.

Row k holds the iterate after k applications of the outer loop (k=0 is the
start vector) together with the perturbation work that produced it.  The CSV
form is self-describing: '#'-prefixed "key = value" lines carry the full run
configuration, floats are written with repr so parsing them back is exact.
"""

import numpy as np

COLUMNS = ("k", "proximity", "target", "gamma_consumed", "probes_accepted", "probes_rejected")


class IterateTrace:
    def __init__(self, k, proximity, target, gamma_consumed, probes_accepted,
                 probes_rejected, psi=None, metadata=None):
        self.k = np.asarray(k, dtype=np.int64)
        self.proximity = np.asarray(proximity, dtype=np.float64)
        self.target = np.asarray(target, dtype=np.float64)
        self.gamma_consumed = np.asarray(gamma_consumed, dtype=np.float64)
        self.probes_accepted = np.asarray(probes_accepted, dtype=np.int64)
        self.probes_rejected = np.asarray(probes_rejected, dtype=np.int64)
        self.psi = None if psi is None else np.asarray(psi, dtype=np.float64)
        self.metadata = dict(metadata or {})
        # extras populated on request by the runners; never serialized
        self.phase_targets = None
        self.probe_events = None
        self.snapshots = None
        self.final = None
        n = self.k.size
        if n == 0:
            raise ValueError("a trace needs at least one record")
        if self.k[0] != 0 or (n > 1 and np.any(np.diff(self.k) <= 0)):
            raise ValueError("iteration indices must increase strictly from 0")
        for name in ("proximity", "target", "gamma_consumed", "probes_accepted",
                     "probes_rejected"):
            if getattr(self, name).size != n:
                raise ValueError(f"column {name} has wrong length")
        if self.psi is not None and self.psi.size != n:
            raise ValueError("column psi has wrong length")

    def __len__(self):
        return self.k.size

    def record(self, position):
        row = {name: getattr(self, name)[position] for name in COLUMNS}
        if self.psi is not None:
            row["psi"] = self.psi[position]
        return row

    def values_equal(self, other):
        """Same iterate values (proximity/target per k); ignores work columns."""
        return (
            np.array_equal(self.k, other.k)
            and np.array_equal(self.proximity, other.proximity)
            and np.array_equal(self.target, other.target)
        )


def write_trace_csv(trace, path):
    with open(path, "w") as fh:
        for key in sorted(trace.metadata):
            fh.write(f"# {key} = {trace.metadata[key]}\n")
        cols = list(COLUMNS) + (["psi"] if trace.psi is not None else [])
        fh.write(",".join(cols) + "\n")
        for i in range(len(trace)):
            fields = [
                str(int(trace.k[i])),
                repr(float(trace.proximity[i])),
                repr(float(trace.target[i])),
                repr(float(trace.gamma_consumed[i])),
                str(int(trace.probes_accepted[i])),
                str(int(trace.probes_rejected[i])),
            ]
            if trace.psi is not None:
                fields.append(repr(float(trace.psi[i])))
            fh.write(",".join(fields) + "\n")


def read_trace_csv(path):
    metadata = {}
    header = None
    rows = []
    with open(path) as fh:
        for line in fh:
            line = line.rstrip("\n")
            if not line:
                continue
            if line.startswith("#"):
                key, _, value = line[1:].partition("=")
                metadata[key.strip()] = value.strip()
                continue
            if header is None:
                header = line.split(",")
                if header[: len(COLUMNS)] != list(COLUMNS):
                    raise ValueError(f"{path}: unexpected trace columns {header}")
                continue
            rows.append(line.split(","))
    if header is None or not rows:
        raise ValueError(f"{path}: no trace data")
    has_psi = "psi" in header
    cols = list(zip(*rows))
    return IterateTrace(
        k=[int(v) for v in cols[0]],
        proximity=[float(v) for v in cols[1]],
        target=[float(v) for v in cols[2]],
        gamma_consumed=[float(v) for v in cols[3]],
        probes_accepted=[int(v) for v in cols[4]],
        probes_rejected=[int(v) for v in cols[5]],
        psi=[float(v) for v in cols[6]] if has_psi else None,
        metadata=metadata,
    )
