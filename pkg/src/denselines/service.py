"""HTTP service for interactive density exploration.

One immutable dataset is loaded at startup; every request recomputes a
density for its own window, grid, mode and filter, so zooming, rebinning and
filtering are just parameter changes. Responses depend only on (dataset,
parameters): identical requests return identical bytes, which a small LRU
cache exploits for repeated slider positions.

Endpoints:

* ``GET /api/meta``        dataset summary
* ``GET /api/density``     DLNS bytes (or JSON with ``format=json``)
* ``GET /api/render.png``  server-side rendering of the same request
* ``GET /api/stats``       summary statistics of the same request

Errors are JSON ``{"error": ...}`` with status 400 (bad parameters) or 413
(grid larger than the configured cell cap).
"""

from __future__ import annotations

import threading
from bisect import bisect_left, bisect_right
from collections import OrderedDict

from fastapi import FastAPI, HTTPException, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse, Response

from . import dlns
from .density import DensityOptions, compute_denselines
from .ingest import SeriesSet
from .model import ContractError, DensityMatrix, GridSpec
from .post import SignedMatrix, gaussian_smooth, stats
from .render import RenderConfigError, RenderSpec, colorize, png_bytes

DEFAULT_MAX_CELLS = 4096 * 4096
CACHE_ENTRIES = 64


class _LruCache:
    def __init__(self, capacity: int):
        self.capacity = capacity
        self._data: OrderedDict = OrderedDict()
        self._lock = threading.Lock()

    def get(self, key):
        with self._lock:
            if key in self._data:
                self._data.move_to_end(key)
                return self._data[key]
            return None

    def put(self, key, value):
        with self._lock:
            self._data[key] = value
            self._data.move_to_end(key)
            while len(self._data) > self.capacity:
                self._data.popitem(last=False)


def _bad_request(message: str) -> HTTPException:
    return HTTPException(status_code=400, detail=message)


def _parse_request(q, max_cells: int) -> tuple:
    """Canonical parameter tuple from query params; raises 400/413 on bad input."""

    def _num(name, conv, default):
        text = q.get(name)
        if text is None or text == "":
            return default
        try:
            return conv(text)
        except ValueError:
            raise _bad_request(f"parameter {name!r}: not a number") from None

    def _flag(name, default=False):
        text = q.get(name)
        if text is None:
            return default
        if text.lower() in ("1", "true", "yes", "on"):
            return True
        if text.lower() in ("0", "false", "no", "off"):
            return False
        raise _bad_request(f"parameter {name!r}: not a boolean")

    cols = _num("cols", int, 400)
    rows = _num("rows", int, 300)
    if cols < 1 or rows < 1:
        raise _bad_request("cols and rows must be positive")
    if cols * rows > max_cells:
        raise HTTPException(
            status_code=413,
            detail=f"requested {cols * rows} cells exceeds the cap of {max_cells}",
        )
    mode = q.get("mode", "binary")
    if mode not in ("binary", "aa", "exact"):
        raise _bad_request(f"unknown mode {mode!r}")
    smooth = _num("smooth", float, 0.0)
    if smooth < 0:
        raise _bad_request("smooth must be >= 0")
    return (
        cols,
        rows,
        _num("t0", float, None),
        _num("t1", float, None),
        _num("v0", float, None),
        _num("v1", float, None),
        mode,
        _flag("raw"),
        smooth,
        q.get("filter") or None,
        q.get("filter2") or None,
    )


class DensityService:
    """Request handling around one immutable, id-sorted dataset."""

    def __init__(self, dataset: SeriesSet, *, workers: int = 1, max_cells: int = DEFAULT_MAX_CELLS):
        self.dataset = dataset.sorted_by_id()
        self.workers = workers
        self.max_cells = max_cells
        self.cache = _LruCache(CACHE_ENTRIES)
        self.id_index = {sid: i for i, sid in enumerate(self.dataset.ids)}
        # one density computation at a time; each may use `workers` processes
        self.compute_gate = threading.Semaphore(1)

    def select(self, filter_text: str | None) -> SeriesSet | None:
        """Subset matching an id prefix or an explicit ``ids:a,b,c`` list."""
        if not filter_text:
            return self.dataset
        if filter_text.startswith("ids:"):
            wanted = [w for w in filter_text[4:].split(",") if w]
            indices = sorted(self.id_index[w] for w in wanted if w in self.id_index)
        else:
            # ids are sorted; a prefix selects a contiguous range
            ids = self.dataset.ids
            lo = bisect_left(ids, filter_text)
            hi = bisect_right(ids, filter_text + "￿")
            indices = list(range(lo, hi))
        if not indices:
            return None
        return self.dataset.subset(indices)

    def grid_for(self, cols, rows, t0, t1, v0, v1) -> GridSpec:
        te, ve = self.dataset.t_extent, self.dataset.v_extent
        t0 = te[0] if t0 is None else min(max(t0, te[0]), te[1])
        t1 = te[1] if t1 is None else min(max(t1, te[0]), te[1])
        v0 = ve[0] if v0 is None else min(max(v0, ve[0]), ve[1])
        v1 = ve[1] if v1 is None else min(max(v1, ve[0]), ve[1])
        if not (t0 < t1 and v0 < v1):
            raise _bad_request("window is empty after clamping to dataset extents")
        try:
            return GridSpec(cols, rows, t0, t1, v0, v1)
        except ContractError as e:
            raise _bad_request(str(e)) from e

    def density_bytes(self, params: tuple) -> bytes:
        cached = self.cache.get(params)
        if cached is not None:
            return cached
        cols, rows, t0, t1, v0, v1, mode, raw, sigma, filter1, filter2 = params
        grid = self.grid_for(cols, rows, t0, t1, v0, v1)
        options = DensityOptions(mode=mode, raw=raw)
        if sigma > 0 and filter2 is not None:
            raise _bad_request("smoothing a difference is not supported")

        with self.compute_gate:
            d = self._one_density(filter1, grid, options)
            if filter2 is not None:
                d2 = self._one_density(filter2, grid, options)
                d = DensityMatrix(grid, d.cells - d2.cells, d.series_count)
        if sigma > 0:
            d = gaussian_smooth(d, sigma)
        payload = dlns.to_bytes(d)
        self.cache.put(params, payload)
        return payload

    def _one_density(self, filter_text, grid, options) -> DensityMatrix:
        subset = self.select(filter_text)
        if subset is None:
            return DensityMatrix.zeros(grid)
        return compute_denselines(subset, grid, options, workers=self.workers)


def create_app(
    dataset: SeriesSet,
    *,
    workers: int = 1,
    max_cells: int = DEFAULT_MAX_CELLS,
    static_dir: str | None = None,
) -> FastAPI:
    service = DensityService(dataset, workers=workers, max_cells=max_cells)
    app = FastAPI(title="denselines")
    app.state.service = service

    @app.exception_handler(RequestValidationError)
    async def _validation_handler(request: Request, exc: RequestValidationError):
        return JSONResponse(status_code=400, content={"error": str(exc.errors()[:1])})

    @app.exception_handler(HTTPException)
    async def _http_handler(request: Request, exc: HTTPException):
        return JSONResponse(status_code=exc.status_code, content={"error": exc.detail})

    @app.get("/api/meta")
    def meta():
        ds = service.dataset
        return {
            "series_count": len(ds),
            "t_extent": list(ds.t_extent),
            "v_extent": list(ds.v_extent),
            "id_sample": ds.ids[:20],
        }

    @app.get("/api/density")
    def density(request: Request):
        params = _parse_request(request.query_params, service.max_cells)
        payload = service.density_bytes(params)
        if request.query_params.get("format") == "json":
            d = dlns.from_bytes(payload)
            return {
                "cols": d.grid.cols,
                "rows": d.grid.rows,
                "t_min": d.grid.t_min,
                "t_max": d.grid.t_max,
                "v_min": d.grid.v_min,
                "v_max": d.grid.v_max,
                "series_count": d.series_count,
                "cells": d.cells.tolist(),
            }
        return Response(content=payload, media_type="application/octet-stream")

    @app.get("/api/render.png")
    def render_png(request: Request):
        q = request.query_params
        params = _parse_request(q, service.max_cells)
        scale = q.get("scale", "linear")
        if scale not in ("linear", "log1p", "pow"):
            raise _bad_request(f"unknown scale {scale!r}")
        try:
            gamma = float(q.get("gamma", "1.0"))
        except ValueError:
            raise _bad_request("parameter 'gamma': not a number") from None
        disc = q.get("discontinuity", "true").lower() not in ("0", "false", "no", "off")

        payload = service.density_bytes(params)
        d = dlns.from_bytes(payload)
        is_diff = params[-1] is not None
        try:
            spec = RenderSpec(
                scale="diverging" if is_diff else "viridis",
                transform=scale,
                gamma=gamma,
                discontinuity=disc,
            )
            matrix = SignedMatrix(d.grid, d.cells) if is_diff else d
            img = colorize(matrix, spec)
        except RenderConfigError as e:
            raise _bad_request(str(e)) from e
        return Response(content=png_bytes(img), media_type="image/png")

    @app.get("/api/stats")
    def density_stats(request: Request):
        params = _parse_request(request.query_params, service.max_cells)
        d = dlns.from_bytes(service.density_bytes(params))
        s = stats(d)
        return {
            "min": s.min,
            "max": s.max,
            "nonzero_min": s.nonzero_min,
            "total": s.total,
            "series_count": d.series_count,
        }

    if static_dir:
        from fastapi.staticfiles import StaticFiles

        app.mount("/", StaticFiles(directory=static_dir, html=True), name="viewer")

    return app
