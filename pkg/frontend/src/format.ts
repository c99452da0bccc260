// The API renders metrics with 6 fractional digits; toFixed(6) reproduces
// those bytes exactly for values that round-tripped through the payload, so
// displayed numbers string-match what the server sent.

export function fmt6(value: number): string {
  return value.toFixed(6);
}

export function formatClock(seconds: number): string {
  const total = Math.floor(seconds);
  const mm = Math.floor(total / 60);
  const ss = total % 60;
  return `${String(mm).padStart(2, "0")}:${String(ss).padStart(2, "0")}`;
}

export function formatRange(startS: number, endS: number): string {
  return `${formatClock(startS)}–${formatClock(endS)}`;
}
