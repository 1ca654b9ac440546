export interface UiConfig {
  /** API origin, e.g. "http://localhost:8000". Empty string = same origin. */
  baseUrl: string;
  /** Optional static bearer token; sent as Authorization header when set. */
  token: string | null;
  /** Dashboard poll cadence in milliseconds. */
  pollIntervalMs: number;
}

export const DEFAULT_CONFIG: UiConfig = {
  baseUrl: "",
  token: null,
  pollIntervalMs: 2000,
};

declare global {
  interface Window {
    DUELOPT_CONFIG?: Partial<UiConfig>;
  }
}

/**
 * Resolve the runtime config. A deployment can set `window.DUELOPT_CONFIG`
 * in a script tag before the app loads; anything it leaves out falls back
 * to the defaults above.
 */
export function resolveConfig(overrides?: Partial<UiConfig>): UiConfig {
  const fromWindow =
    typeof window !== "undefined" ? window.DUELOPT_CONFIG ?? {} : {};
  return { ...DEFAULT_CONFIG, ...fromWindow, ...overrides };
}
