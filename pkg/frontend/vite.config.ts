import { defineConfig } from "vitest/config";

// The bundle is served by the coding service at /ui, so all asset URLs
// must stay relative.
export default defineConfig({
  base: "./",
  build: {
    outDir: "dist",
    emptyOutDir: true,
  },
  test: {
    environment: "happy-dom",
    environmentOptions: {
      // the contract tests talk to a locally spawned service on another
      // port, which the DOM's same-origin policy would otherwise block
      happyDOM: {
        settings: {
          // vitest's option types lag behind happy-dom's settings shape,
          // but the object is handed to the Window constructor unchanged
          // @ts-expect-error -- fetch group missing from the stale type
          fetch: { disableSameOriginPolicy: true },
        },
      },
    },
    include: ["tests/**/*.test.ts"],
    testTimeout: 30000,
    hookTimeout: 30000,
  },
});
