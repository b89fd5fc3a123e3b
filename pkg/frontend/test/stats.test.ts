import assert from "node:assert/strict";
import { test } from "node:test";

import { linearFit, logLogSlope, median, quantile } from "../src/stats";

test("median of odd and even lists", () => {
  assert.equal(median([3, 1, 2]), 2);
  assert.equal(median([4, 1, 3, 2]), 2.5);
});

test("quartiles interpolate", () => {
  assert.equal(quantile([0, 1, 2, 3], 0.25), 0.75);
  assert.equal(quantile([0, 1, 2, 3], 0.75), 2.25);
});

test("linear fit recovers an exact line", () => {
  const { slope, intercept } = linearFit([1, 2, 3, 4], [3, 5, 7, 9]);
  assert.ok(Math.abs(slope - 2) < 1e-12);
  assert.ok(Math.abs(intercept - 1) < 1e-12);
});

test("log-log slope of a power law is its exponent", () => {
  const xs = [16, 64, 256, 1024];
  const ys = xs.map((x) => 3 * x ** 0.75);
  assert.ok(Math.abs(logLogSlope(xs, ys) - 0.75) < 1e-12);
});

test("log-log slope ignores non-positive points", () => {
  const slope = logLogSlope([10, 100, 1000], [1, NaN, 100]);
  assert.ok(Math.abs(slope - 1) < 1e-12);
});
