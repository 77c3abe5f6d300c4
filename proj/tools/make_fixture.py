#!/usr/bin/env python3
"""Writes data/fixture/{dataset.jsonl,mock.json,config.cfg}.

Mock responses are keyed by prompt digest, computed with `finmoral prompt --digest`.
Usage: tools/make_fixture.py BUILD_DIR
"""

import csv
import json
import subprocess
import sys
import tempfile
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent
OUT = ROOT / "data" / "fixture"

YOY_TABLE = {"headers": ["Year", "Revenue (B)", "Net Profit (B)"], "rows": [["2022", "5.6", "1.2"], ["2021", "5.0", "1.0"]]}
YOY_PASSAGE = ("The revenue for 2022 was $5.6B, while for 2021 it was $5.0B. The company's net profit also "
               "increased year-over-year. Table below shows quarterly breakdowns.")
YOY_TRACE = ("Step 1: Revenue in 2022 = $5.6B; in 2021 = $5.0B. Step 2: Increase = $0.6B. "
             "Step 3: $0.6B/$5.0B = 12%. Final Answer: +12.0%.")

SEGMENTS = {"headers": ["Segment", "Region", "Revenue (B)", "Operating Margin"],
            "rows": [["Cloud", "Europe", "3.2", "18.5%"], ["Devices", "Asia", "2.7", "9.0%"],
                     ["Services", "Europe", "1.9", "12.25%"], ["Licensing", "Americas", "0.8", "15.0%"]]}

QUARTERS = {"headers": ["Quarter", "Revenue (B)"], "rows": [["Q1", "1.0"], ["Q2", "1.5"], ["Q3", "2.0"], ["Q4", "1.5"]]}

YEARS = {"headers": ["Year", "Revenue (B)"], "rows": [["2020", "4.0"], ["2021", "5.0"], ["2022", "5.6"]]}

RECORDS = [
    ({"id": "revenue-yoy", "question": "What is the YoY change in revenue?", "table": YOY_TABLE, "passage": YOY_PASSAGE,
      "gold_answers": ["12%"], "trust_answer": "+12.0%", "modality_tag": "symbolic"},
     [YOY_TRACE] * 5),
    ({"id": "net-profit-2022", "question": "What was the net profit in 2022?", "table": YOY_TABLE,
      "gold_answers": ["1.2", "$1.2B"], "modality_tag": "structured"},
     ["Step 1: The 2022 row lists net profit of 1.2. Final Answer: 1.2"] * 3
     + ["Step 1: Net profit reads 1.0. Final Answer: 1.0"] * 2),
    ({"id": "total-revenue", "question": "What is the total revenue across all years?", "table": YEARS,
      "gold_answers": ["14.6"], "modality_tag": "structured"},
     ["Step 1: 4.0 + 5.0 + 5.6 = 14.6. Final Answer: 14.6"] * 4
     + ["Step 1: 5.0 + 5.6 = 10.6. Final Answer: 10.6"]),
    ({"id": "europe-count", "question": "How many segments are in Europe?", "table": SEGMENTS,
      "gold_answers": ["2", "two"], "modality_tag": "structured"},
     ["Cloud and Services are in Europe. Final Answer: 2"] * 4 + ["Final Answer: 3"]),
    ({"id": "max-margin", "question": "What was the largest operating margin?", "table": SEGMENTS,
      "gold_answers": ["18.5%"], "modality_tag": "structured"},
     ["Cloud has the largest margin. Final Answer: 18.5%"] * 5),
    ({"id": "opex-difference",
      "question": "What is the difference in operating expenses between 2023 and 2022?",
      "passage": "Operating expenses were $2.4M in 2023 compared with $2.0M in 2022.",
      "gold_answers": ["$0.4M"], "trust_answer": "400000", "modality_tag": "symbolic"},
     ["Step 1: $2.4M - $2.0M = $0.4M. Final Answer: $0.4M"] * 5),
    ({"id": "eps-beat", "question": "Did the company beat EPS expectations?",
      "passage": "Analysts expected EPS of $1.20 for the quarter; the company reported EPS of $1.35.",
      "gold_answers": ["Yes"], "modality_tag": "natural"},
     ["Step 1: Forecast $1.20. Step 2: Reported $1.35. Step 3: $1.35 > $1.20. Final Answer: Yes"] * 4
     + ["Step 1: Reported $1.30 is below the forecast. Final Answer: No"]),
    ({"id": "avg-quarter", "question": "What was the average revenue per quarter?", "table": QUARTERS,
      "gold_answers": ["1.5"], "modality_tag": "structured"},
     ["Step 1: (1.0 + 1.5 + 2.0 + 1.5) / 4 = 1.5. Final Answer: 1.5"] * 3
     + ["Step 1: 1.0 + 1.5 + 2.0 + 1.5 = 6. Final Answer: 6"] * 2),
    ({"id": "segment-lookup", "question": "Which segment had revenue of 3.2?", "table": SEGMENTS,
      "gold_answers": ["Cloud"], "modality_tag": "structured"},
     ["Final Answer: Cloud"] * 2 + ["Final Answer: Devices"] * 3),
    ({"id": "net-income-growth", "question": "What was the growth in net income?",
      "passage": "Net income was $150 million in 2022, up from $120 million in 2021.",
      "gold_answers": ["25%"], "trust_answer": "25.0%", "modality_tag": "symbolic"},
     ["Step 1: 150 - 120 = 30. Step 2: 30 / 120 = 25%. Final Answer: 25%"] * 4
     + ["Step 1: 30 / 150 = 20%. Final Answer: 20%"]),
]


def digest(cli: Path, record: dict, tmp: Path) -> str:
    args = [str(cli), "prompt", "--digest", "-q", record["question"], "--config", str(OUT / "config.cfg")]
    if "table" in record:
        path = tmp / (record["id"] + ".csv")
        with path.open("w", newline="") as f:
            w = csv.writer(f, lineterminator="\n")
            w.writerow(record["table"]["headers"])
            w.writerows(record["table"]["rows"])
        args += ["--table", str(path)]
    if "passage" in record:
        args += ["--passage", record["passage"]]
    return subprocess.run(args, check=True, capture_output=True, text=True).stdout.strip()


def main() -> None:
    cli = Path(sys.argv[1]) / "finmoral"
    OUT.mkdir(parents=True, exist_ok=True)
    (OUT / "config.cfg").write_text("# 10-record fixture: scripted generations, baseline reranker\n"
                                    "dataset=wtq\nseed=42\nfewshot_file=../fewshot.json\nmock_fixture_file=mock.json\n")
    mock = {}
    with tempfile.TemporaryDirectory() as tmp:
        for record, responses in RECORDS:
            mock[digest(cli, record, Path(tmp))] = responses
    with (OUT / "dataset.jsonl").open("w") as f:
        for record, _ in RECORDS:
            f.write(json.dumps(record, ensure_ascii=False) + "\n")
    (OUT / "mock.json").write_text(json.dumps(mock, indent=2, ensure_ascii=False) + "\n")


if __name__ == "__main__":
    main()
