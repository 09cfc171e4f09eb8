"""
render_report.py
Human-readable outputs of a run: an HTML summary page and PGM rasters.

Writes:
    <out>/summary.html
    <out>/<name>.pgm     (grid spaces only; complement 0, domain 128, result 255)
"""

import sys
from pathlib import Path

import pandas as pd
from jinja2 import Template

sys.path.insert(0, str(Path(__file__).resolve().parent.parent))
from config.settings import PGM_LEVELS

sys.path.insert(0, str(Path(__file__).resolve().parent))
from metric_core import MetricSpace, grid_shape
from utils import atomic_write_bytes, atomic_write_text


SUMMARY_TEMPLATE = Template("""<!DOCTYPE html>
<html lang="en">
<head>
<meta charset="UTF-8">
<title>Uniform approximation summary</title>
<style>
  body { margin: 0; padding: 20px 0; background-color: #f0f2f5; font-family: -apple-system, 'Segoe UI', Arial, sans-serif; }
  .container { max-width: 760px; margin: 0 auto; background-color: #0f1923; border-radius: 12px; overflow: hidden; }
  .header { padding: 28px; border-bottom: 2px solid #d4a017; }
  .header-title { color: #ffffff; font-size: 24px; font-weight: 700; margin: 0 0 6px 0; }
  .header-sub { color: #8fa3b8; font-size: 13px; margin: 0; }
  .section { padding: 20px 28px; border-bottom: 1px solid #1e2e3d; color: #e8edf2; font-size: 13px; }
  .section-title { color: #d4a017; font-size: 11px; font-weight: 700; letter-spacing: 2px; text-transform: uppercase; margin: 0 0 14px 0; }
  table { border-collapse: collapse; width: 100%; }
  th, td { border-bottom: 1px solid #1e2e3d; padding: 4px 8px; text-align: right; }
  th { color: #8fa3b8; }
  .pass { color: #22c55e; font-weight: 700; }
  .fail { color: #ef4444; font-weight: 700; }
  .note { color: #8fa3b8; font-style: italic; }
</style>
</head>
<body>
<div class="container">
  <div class="header">
    <p class="header-title">Uniform approximation</p>
    <p class="header-sub">{{ inputs.space }}{% if inputs.domain %} · {{ inputs.domain }}{% endif %}</p>
  </div>

  <div class="section">
    <p class="section-title">Inputs</p>
    <table>
    {% for key, value in inputs|dictsort %}
      <tr><th>{{ key }}</th><td>{{ value }}</td></tr>
    {% endfor %}
    </table>
  </div>

  {% for trace in traces %}
  <div class="section">
    <p class="section-title">{{ trace.mode }} construction</p>
    <p>tau = {{ trace.tau }}, c = {{ trace.c }}, delta = {{ trace.delta }}, L = {{ trace.length_unit }},
       status <strong>{{ trace.status }}</strong>, {{ trace.size }} vertices</p>
    {{ trace.levels_html }}
  </div>
  {% endfor %}

  {% for report in reports %}
  <div class="section">
    <p class="section-title">Uniformity · {{ report.domain }}</p>
    <table>
      <tr><th>pairs</th><td>{{ report.pairs }}</td></tr>
      <tr><th>max C_u</th><td>{{ "%.6g"|format(report.cu_max) }}</td></tr>
      <tr><th>p95 C_u</th><td>{{ "%.6g"|format(report.cu_p95) }}</td></tr>
      <tr><th>median C_u</th><td>{{ "%.6g"|format(report.cu_median) }}</td></tr>
      <tr><th>worst pair</th><td>{{ report.worst_pair }}</td></tr>
      {% if report.closeness %}
      <tr><th>closeness ({{ report.closeness.mode }}, ε = {{ report.closeness.epsilon }})</th>
          <td class="{{ 'pass' if report.closeness.passed else 'fail' }}">
            {{ 'pass' if report.closeness.passed else 'fail' }}
            {% for name, check in report.closeness.checks|dictsort %}{% if not check.passed %}
              · {{ name }} witness {{ check.witness }}{% endif %}{% endfor %}
          </td></tr>
      {% endif %}
      {% if report.certification %}
      <tr><th>certificates</th>
          <td class="{{ 'pass' if report.certification.passed else 'fail' }}">
            {{ report.certification.certified }}/{{ report.certification.pairs }} certified,
            {{ report.certification.violations }} violations</td></tr>
      {% endif %}
    </table>
    <p class="note">{{ report.note }}</p>
  </div>
  {% endfor %}

  {% if rasters %}
  <div class="section">
    <p class="section-title">Rasters</p>
    {% for name in rasters %}<p><a href="{{ name }}">{{ name }}</a></p>{% endfor %}
  </div>
  {% endif %}
</div>
</body>
</html>
""")


def levels_table(rows: list[dict]) -> str:
    if not rows:
        return '<p class="note">No levels were run.</p>'
    return pd.DataFrame(rows).to_html(index=False, border=0, float_format=lambda v: f"{v:.6g}")


def render_summary(inputs: dict, traces: list[dict], reports: list[dict], rasters: list[str]) -> str:
    """
    traces: trace dicts (approximate.trace_to_dict) with an added "rows" list
    reports: UniformityReport dicts
    """
    prepared = []
    for trace in traces:
        prepared.append({
            "mode": trace["mode"], "tau": trace["tau"], "c": trace["c"], "delta": trace["delta"],
            "length_unit": trace["length_unit"], "status": trace["status"], "size": len(trace["result"]),
            "levels_html": levels_table(trace.get("rows", [])),
        })
    return SUMMARY_TEMPLATE.render(inputs=inputs, traces=prepared, reports=reports, rasters=rasters)


def save_summary(html: str, out_dir: Path) -> Path:
    out = atomic_write_text(Path(out_dir) / "summary.html", html)
    print(f"  Saved → {out}")
    return out


def pgm_bytes(space: MetricSpace, domain_mask, result_mask=None) -> bytes:
    """Binary 8-bit PGM of a grid space, one pixel per vertex."""
    shape = grid_shape(space)
    if shape is None:
        raise ValueError("PGM rasters need a space whose coords form a full integer grid")
    w, h = shape
    pixels = bytearray(w * h)
    for v, (x, y) in enumerate(space.coords):
        if result_mask is not None and v in result_mask:
            level = PGM_LEVELS["result"]
        elif v in domain_mask:
            level = PGM_LEVELS["domain"]
        else:
            level = PGM_LEVELS["complement"]
        pixels[int(y) * w + int(x)] = level
    return f"P5\n{w} {h}\n255\n".encode("ascii") + bytes(pixels)


def write_pgm(space: MetricSpace, domain_mask, result_mask, path: Path) -> Path | None:
    """Write a raster when the space is a grid; returns None otherwise."""
    if grid_shape(space) is None:
        print(f"  [skip] {Path(path).name}: space is not a grid")
        return None
    out = atomic_write_bytes(Path(path), pgm_bytes(space, domain_mask, result_mask))
    print(f"  Saved → {out}")
    return out
