import { defineConfig } from "vitest/config";

export default defineConfig({
  test: {
    environment: "happy-dom",
    include: ["tests/**/*.test.ts"],
    // the integration suite boots a real API server; give it room
    testTimeout: 60_000,
    hookTimeout: 60_000,
  },
});
