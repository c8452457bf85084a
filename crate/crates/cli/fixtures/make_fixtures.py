"""Regenerates the toy and synthetic fixture corpora. Deterministic, stdlib only."""

import json
import math
from pathlib import Path

HERE = Path(__file__).parent
PAGE_W, PAGE_H = 612.0, 792.0


def write(path, rows):
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as f:
        for r in rows:
            f.write(json.dumps(r, separators=(",", ":")) + "\n")


def box(cx, cy, w=100.0, h=60.0):
    return [cx - w / 2, cy - h / 2, cx + w / 2, cy + h / 2]


def toy():
    # Three documents, two queries, 4-dimensional vectors. Each document has
    # a topic direction; chunks lean toward their document's topic.
    out = HERE / "toy"
    topics = {
        "manual": [1.0, 0.1, 0.0, 0.0],
        "report": [0.0, 1.0, 0.2, 0.0],
        "slides": [0.1, 0.0, 1.0, 0.3],
    }
    chunks = []  # (chunk_id, doc, modality, page, bbox, tilt)
    layout = [
        ("manual", "text", 1, box(150, 200), 0.00),
        ("manual", "text", 4, box(300, 500), 0.30),
        ("manual", "image", 1, box(200, 260), 0.10),
        ("manual", "screenshot", 1, box(306, 396, 612, 792), 0.15),
        ("report", "text", 2, box(120, 100), 0.05),
        ("report", "image", 7, box(400, 600), 0.20),
        ("report", "screenshot", 2, box(306, 396, 612, 792), 0.10),
        ("slides", "text", 3, box(300, 300), 0.25),
        ("slides", "image", 3, box(320, 340), 0.05),
        ("slides", "screenshot", 5, box(306, 396, 612, 792), 0.35),
    ]
    counters = {}
    for doc, modality, page, bb, tilt in layout:
        n = counters.get((doc, modality), 0)
        counters[(doc, modality)] = n + 1
        cid = f"{doc}-{modality[:3]}-{n}"
        t = topics[doc]
        vec = [round(x + tilt * ((i % 2) * 2 - 1), 4) for i, x in enumerate(t)]
        chunks.append((cid, doc, modality, page, bb, vec))
    write(out / "embeddings.jsonl", [
        {"chunk_id": c, "doc_id": d, "modality": m, "page": p, "bbox": b, "vector": v}
        for c, d, m, p, b, v in chunks
    ])
    write(out / "layout.jsonl", [
        {"chunk_id": c, "doc_id": d, "page": p, "bbox": b, "page_width": PAGE_W, "page_height": PAGE_H}
        for c, d, m, p, b, v in chunks
    ])
    queries = {
        "q-install": [0.9, 0.3, 0.1, 0.0],
        "q-results": [0.2, 0.9, 0.4, 0.1],
    }
    write(out / "queries.jsonl", [
        {"query_id": q, "modality": m, "vector": v}
        for q, v in queries.items()
        for m in ("text", "image", "screenshot")
    ])
    write(out / "kg_edges.jsonl", [
        {"u": "manual-tex-0", "v": "manual-ima-0", "weight": 6.0},
        {"u": "manual-ima-0", "v": "manual-scr-0", "weight": 3.0},
        {"u": "manual-tex-0", "v": "manual-scr-0"},
        {"u": "report-tex-0", "v": "report-scr-0", "weight": 8.0},
        {"u": "slides-tex-0", "v": "slides-ima-0", "weight": 2.5},
    ])
    write(out / "qrels.jsonl", [
        {"query_id": "q-install", "doc_id": "manual", "page": 1},
        {"query_id": "q-results", "doc_id": "report", "page": 2},
    ])


def synthetic():
    # Ten queries. Per query three documents:
    #   G (ground truth): graph-connected chunks, relevant page R.
    #   D (distractor): highest unimodal scores, no graph edges.
    #   F (filler): low scores, no edges; anchors the normalization minimum.
    # Queries 0-6: G is co-located on page R; D is spread over distant pages.
    # Queries 7-9: G's screenshot sits three pages away from R (layout fails);
    #   D is co-located, so the layout prior favours D.
    # In queries 0-2 G's text chunk beats D's text score, so the raw baseline
    # hits there and misses elsewhere.
    out = HERE / "synthetic"
    cands, layout, edges, qrels = [], [], [], []
    for q in range(10):
        qid = f"sq{q}"
        rel_page = 3 + q
        g, d, f = f"G{q}", f"D{q}", f"F{q}"
        g_text = 0.95 if q < 3 else 0.80
        g_s_page = rel_page if q < 7 else rel_page + 3
        d_pages = (40, 44, 48) if q < 7 else (40, 40, 40)
        chunks = [
            (g, "text", rel_page, box(150, 200), g_text),
            (g, "image", rel_page, box(180, 260), 0.74 + 0.005 * q),
            (g, "screenshot", g_s_page, box(306, 396, 612, 792), 0.72),
            (d, "text", d_pages[0], box(150, 200), 0.90),
            (d, "image", d_pages[1], box(180, 260), 0.88),
            (d, "screenshot", d_pages[2], box(306, 396, 612, 792), 0.86),
            (f, "text", 1, box(100, 100), 0.20),
            (f, "image", 9, box(300, 600), 0.15),
            (f, "screenshot", 17, box(306, 396, 612, 792), 0.10),
        ]
        for doc, modality, page, bb, score in chunks:
            cid = f"{doc}-{modality}"
            cands.append({
                "query_id": qid, "chunk_id": cid, "doc_id": doc, "modality": modality,
                "page": page, "bbox": bb, "raw_score": score,
            })
            layout.append({
                "chunk_id": cid, "doc_id": doc, "page": page, "bbox": bb,
                "page_width": PAGE_W, "page_height": PAGE_H,
            })
        edges += [
            {"u": f"{g}-text", "v": f"{g}-image", "weight": 10.0},
            {"u": f"{g}-image", "v": f"{g}-screenshot", "weight": 10.0},
            {"u": f"{g}-text", "v": f"{g}-screenshot", "weight": 10.0},
        ]
        qrels.append({"query_id": qid, "doc_id": g, "page": rel_page})
    write(out / "candidates.jsonl", cands)
    write(out / "layout.jsonl", layout)
    write(out / "kg_edges.jsonl", edges)
    write(out / "qrels.jsonl", qrels)


if __name__ == "__main__":
    toy()
    synthetic()
