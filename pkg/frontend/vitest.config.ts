import { defineConfig } from "vitest/config";

const E2E_PORT = Number(process.env.UI_E2E_PORT ?? 18123);

export default defineConfig({
  test: {
    environment: "happy-dom",
    // the real bundle is served by the labeling service itself, so tests
    // run with the service's origin as the page origin
    environmentOptions: {
      happyDOM: { url: `http://127.0.0.1:${E2E_PORT}` },
    },
    include: ["tests/**/*.test.ts"],
    testTimeout: 120_000,
    hookTimeout: 120_000,
  },
});
