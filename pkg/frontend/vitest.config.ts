import { defineConfig } from "vitest/config";

export default defineConfig({
  test: {
    include: ["tests/**/*.test.ts"],
    environment: "node",
    // the e2e suite boots a real gateway process
    testTimeout: 30_000,
    hookTimeout: 60_000,
  },
});
