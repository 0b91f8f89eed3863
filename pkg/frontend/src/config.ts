/** Runtime configuration for the annotator. */

export interface UiConfig {
  /** Base URL of the annotation service, without a trailing slash. */
  serviceUrl: string;
  /**
   * Template for sample thumbnails. "{id}" is replaced with the sample id,
   * "{base}" with the template base URL, e.g. "{base}/{id}.png".
   */
  assetTemplate: string;
  /** Base URL substituted for "{base}" in the asset template. */
  assetBase: string;
  /** Session to annotate. */
  sessionId: string;
}

export const DEFAULTS: UiConfig = {
  serviceUrl: "http://127.0.0.1:8765",
  assetTemplate: "{base}/{id}.png",
  assetBase: "/thumbs",
  sessionId: "",
};

/** Resolve the thumbnail URL for a sample. */
export function thumbnailUrl(config: UiConfig, sampleId: string): string {
  return config.assetTemplate
    .replace("{base}", config.assetBase)
    .replace("{id}", encodeURIComponent(sampleId));
}

/**
 * Read configuration from query parameters, falling back to defaults.
 * Recognized keys: service, assets, template, session.
 */
export function configFromQuery(query: string): UiConfig {
  const params = new URLSearchParams(query);
  return {
    serviceUrl: stripSlash(params.get("service") ?? DEFAULTS.serviceUrl),
    assetTemplate: params.get("template") ?? DEFAULTS.assetTemplate,
    assetBase: stripSlash(params.get("assets") ?? DEFAULTS.assetBase),
    sessionId: params.get("session") ?? DEFAULTS.sessionId,
  };
}

function stripSlash(url: string): string {
  return url.endsWith("/") ? url.slice(0, -1) : url;
}
