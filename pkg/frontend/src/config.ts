export interface AppConfig {
  /** Base URL of the index service, e.g. http://127.0.0.1:8000 */
  baseUrl: string;
  /** Static bearer token; empty string disables the header. */
  authToken: string;
}

export function configFromLocation(): AppConfig {
  const params = new URLSearchParams(window.location.search);
  return {
    baseUrl: params.get('service') ?? 'http://127.0.0.1:8000',
    authToken: params.get('token') ?? '',
  };
}
