import assert from "node:assert/strict";
import { mkdtempSync, readFileSync, writeFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";
import { test } from "node:test";

import { MissingColumnError } from "../src/csv";
import { main } from "../src/main";
import { render } from "../src/plots";
import { logLogSlope } from "../src/stats";

const FIXTURES = join(__dirname, "..", "..", "test", "fixtures");

const fixture = (name: string) => join(FIXTURES, name);
const scratch = () => mkdtempSync(join(tmpdir(), "mflq-plots-"));

test("stability figure renders every algorithm with a legend entry", () => {
  const svg = render({ kind: "stability", input: fixture("stability_curve.csv"), output: "" });
  assert.ok(svg.length > 1000);
  for (const alg of ["mflq_v1", "mflq_v3", "lspi", "model_based"]) {
    assert.ok(svg.includes(`>${alg}<`), `legend entry for ${alg}`);
  }
});

test("cost-per-phase figure draws the optimal-cost reference line", () => {
  const svg = render({
    kind: "cost-per-phase",
    input: fixture("cost_per_phase.csv"),
    reference: fixture("lambda_opt.csv"),
    output: "",
  });
  assert.ok(svg.includes("optimal average cost"));
  assert.ok(svg.includes("stroke-dasharray"));
});

test("single-algorithm input yields exactly one series legend entry", () => {
  const rows = readFileSync(fixture("cost_per_phase.csv"), "utf-8")
    .split("\n")
    .filter((l, i) => i === 0 || l.startsWith("0,mflq_v3") || l.startsWith("1,mflq_v3"));
  const dir = scratch();
  const single = join(dir, "single.csv");
  writeFileSync(single, rows.join("\n") + "\n");
  const svg = render({ kind: "cost-per-phase", input: single, output: "" });
  const entries = svg.match(/>mflq_v3</g) ?? [];
  assert.equal(entries.length, 1);
  assert.ok(!svg.includes(">lspi<"));
});

test("regret figure annotates the slope of an independent re-fit", () => {
  const svg = render({ kind: "regret-sweep", input: fixture("regret_sweep.csv"), output: "" });
  const annotated = Number(svg.split("slope=")[1].split("<")[0]);
  const lines = readFileSync(fixture("regret_sweep.csv"), "utf-8").trim().split("\n");
  const header = lines[0].split(",");
  const iT = header.indexOf("T");
  const iM = header.indexOf("median_cumulative_regret");
  const iS = header.indexOf("loglog_slope");
  const Ts = lines.slice(1).map((l) => Number(l.split(",")[iT]));
  const meds = lines.slice(1).map((l) => Number(l.split(",")[iM]));
  const refit = logLogSlope(Ts, meds);
  const reported = Number(lines[1].split(",")[iS]);
  assert.ok(Math.abs(annotated - refit) <= 1e-6, `annotation ${annotated} vs refit ${refit}`);
  assert.ok(Math.abs(annotated - reported) <= 1e-6, `annotation ${annotated} vs sweep column ${reported}`);
});

test("rendering is deterministic", () => {
  const a = render({ kind: "stability", input: fixture("stability_curve.csv"), output: "" });
  const b = render({ kind: "stability", input: fixture("stability_curve.csv"), output: "" });
  assert.equal(a, b);
});

test("style map overrides a series color", () => {
  const svg = render({
    kind: "stability",
    input: fixture("stability_curve.csv"),
    output: "",
    styles: { lspi: "#123456" },
  });
  assert.ok(svg.includes("#123456"));
});

test("missing column raises a named error", () => {
  const dir = scratch();
  const bad = join(dir, "bad.csv");
  writeFileSync(bad, "algorithm,whatever\nx,1\n");
  assert.throws(
    () => render({ kind: "stability", input: bad, output: "" }),
    MissingColumnError,
  );
});

test("empty data raises", () => {
  const dir = scratch();
  const empty = join(dir, "empty.csv");
  writeFileSync(empty, "T,median_cumulative_regret\n");
  assert.throws(() => render({ kind: "regret-sweep", input: empty, output: "" }));
});

test("cli writes files from flags and from a spec file", () => {
  const dir = scratch();
  const out1 = join(dir, "a.svg");
  assert.equal(main(["--kind", "stability", "--input", fixture("stability_curve.csv"), "--output", out1]), 0);
  assert.ok(readFileSync(out1, "utf-8").startsWith("<svg"));

  const specPath = join(dir, "spec.json");
  const out2 = join(dir, "b.svg");
  writeFileSync(specPath, JSON.stringify({
    kind: "regret-sweep",
    input: fixture("regret_sweep.csv"),
    output: out2,
  }));
  assert.equal(main([specPath]), 0);
  assert.ok(readFileSync(out2, "utf-8").includes("slope="));
});

test("cli reports bad usage with exit code 2", () => {
  assert.equal(main(["--kind", "stability"]), 2);
});
