import { describe, expect, it } from "vitest";
import { parsePpm, PpmFormatError } from "../src/ppm.js";

function ppmBytes(header: string, pixels: number[]): ArrayBuffer {
  const head = new TextEncoder().encode(header);
  const out = new Uint8Array(head.length + pixels.length);
  out.set(head, 0);
  out.set(pixels, head.length);
  return out.buffer;
}

describe("parsePpm", () => {
  it("decodes a 2x1 P6 image to RGBA", () => {
    const image = parsePpm(ppmBytes("P6\n2 1\n255\n", [255, 0, 0, 0, 128, 0]));
    expect(image.width).toBe(2);
    expect(image.height).toBe(1);
    expect([...image.rgba]).toEqual([255, 0, 0, 255, 0, 128, 0, 255]);
  });

  it("skips header comments", () => {
    const image = parsePpm(ppmBytes("P6\n# made by a test\n1 1\n255\n", [9, 9, 9]));
    expect(image.width).toBe(1);
  });

  it("rejects non-P6, bad maxval, and truncated data", () => {
    expect(() => parsePpm(ppmBytes("P3\n1 1\n255\n", [0, 0, 0]))).toThrowError(
      PpmFormatError,
    );
    expect(() => parsePpm(ppmBytes("P6\n1 1\n65535\n", [0, 0, 0]))).toThrowError(
      PpmFormatError,
    );
    expect(() => parsePpm(ppmBytes("P6\n2 2\n255\n", [0, 0, 0]))).toThrowError(
      PpmFormatError,
    );
  });
});
