import { describe, expect, it } from "vitest";

import { configFromQuery, DEFAULTS, thumbnailUrl } from "../src/config.js";

describe("thumbnailUrl", () => {
  it("substitutes base and id in the template", () => {
    const config = {
      ...DEFAULTS,
      assetTemplate: "{base}/{id}.png",
      assetBase: "https://cdn.example/thumbs",
    };
    expect(thumbnailUrl(config, "sample-042")).toBe(
      "https://cdn.example/thumbs/sample-042.png",
    );
  });

  it("escapes ids that are not URL safe", () => {
    const config = { ...DEFAULTS, assetBase: "/t" };
    expect(thumbnailUrl(config, "a/b c")).toBe("/t/a%2Fb%20c.png");
  });

  it("supports templates without a base placeholder", () => {
    const config = { ...DEFAULTS, assetTemplate: "https://img.test/{id}.jpg" };
    expect(thumbnailUrl(config, "x1")).toBe("https://img.test/x1.jpg");
  });
});

describe("configFromQuery", () => {
  it("falls back to defaults", () => {
    expect(configFromQuery("")).toEqual(DEFAULTS);
  });

  it("reads every recognized key", () => {
    const config = configFromQuery(
      "?service=http://localhost:9000/&assets=https://cdn/x/&template={base}/{id}.webp&session=deadbeef",
    );
    expect(config.serviceUrl).toBe("http://localhost:9000");
    expect(config.assetBase).toBe("https://cdn/x");
    expect(config.assetTemplate).toBe("{base}/{id}.webp");
    expect(config.sessionId).toBe("deadbeef");
  });
});
