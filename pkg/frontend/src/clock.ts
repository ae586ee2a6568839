/**
 * Monotonic time source. Question timing must never touch the wall clock:
 * a clock adjustment mid-question would corrupt the response-time signal,
 * while performance.now() is guaranteed non-decreasing.
 */
export type MonotonicClock = () => number;

export const monotonicClock: MonotonicClock = () => performance.now();
