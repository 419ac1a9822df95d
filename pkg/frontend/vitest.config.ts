import { defineConfig } from 'vitest/config'

export default defineConfig({
  test: {
    environment: 'jsdom',
    testTimeout: 240_000,
    hookTimeout: 120_000,
  },
})
