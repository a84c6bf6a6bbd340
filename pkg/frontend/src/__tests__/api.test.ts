import { afterEach, describe, expect, it, vi } from "vitest";

import { ApiClient, ServiceError } from "../api.js";
import { installFakeService, META } from "./fake_service.js";

afterEach(() => vi.unstubAllGlobals());

const PAYLOAD = {
  solar_irradiance: 6,
  temperature: 30,
  wind_speed: 3,
  aod: 0.3,
  land_cover_class: 60,
  water_proximity: 10,
  elevation: 100,
  month: 6,
};

describe("ApiClient", () => {
  it("fetches model metadata", async () => {
    installFakeService();
    const client = new ApiClient("");
    expect(await client.meta()).toEqual(META);
  });

  it("posts scenario payloads as JSON", async () => {
    const fake = installFakeService();
    const client = new ApiClient("");
    const response = await client.scenario(PAYLOAD);
    expect(fake.requests).toContain("POST /v1/scenario");
    expect(response.probabilities).toHaveLength(5);
    expect(response.sci).toBeGreaterThan(0);
  });

  it("raises ServiceError with field names on 400", async () => {
    installFakeService();
    const client = new ApiClient("");
    const partial = { ...PAYLOAD } as Record<string, unknown>;
    delete partial.elevation;
    try {
      await client.scenario(partial as never);
      expect.unreachable();
    } catch (error) {
      expect(error).toBeInstanceOf(ServiceError);
      expect((error as ServiceError).status).toBe(400);
      expect((error as ServiceError).fields).toContain("elevation");
    }
  });

  it("wraps non-JSON failures with the status code", async () => {
    vi.stubGlobal("fetch", async () => new Response("oops", { status: 503 }));
    const client = new ApiClient("");
    await expect(client.health()).rejects.toThrowError(/503/);
  });

  it("prefixes a base URL when configured", async () => {
    const fake = installFakeService();
    const client = new ApiClient("http://example.test:8000");
    await client.health();
    expect(fake.requests[0]).toBe("GET http://example.test:8000/v1/health");
  });
});
