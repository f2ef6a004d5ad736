/** Minimal binary PPM (P6, maxval 255) decoder for the sample image endpoint. */

export interface PpmImage {
  width: number;
  height: number;
  /** RGBA bytes, row-major, ready for a canvas ImageData buffer. */
  rgba: Uint8ClampedArray<ArrayBuffer>;
}

export class PpmFormatError extends Error {}

export function parsePpm(buffer: ArrayBuffer): PpmImage {
  const bytes = new Uint8Array(buffer);
  let pos = 0;

  const isSpace = (b: number) => b === 32 || b === 9 || b === 10 || b === 13;

  function token(): string {
    while (pos < bytes.length) {
      if (isSpace(bytes[pos])) {
        pos += 1;
      } else if (bytes[pos] === 35 /* '#' comment */) {
        while (pos < bytes.length && bytes[pos] !== 10) pos += 1;
      } else {
        break;
      }
    }
    const start = pos;
    while (pos < bytes.length && !isSpace(bytes[pos])) pos += 1;
    if (start === pos) throw new PpmFormatError("truncated PPM header");
    return String.fromCharCode(...bytes.subarray(start, pos));
  }

  if (token() !== "P6") throw new PpmFormatError("not a binary PPM (P6) file");
  const width = Number(token());
  const height = Number(token());
  const maxval = Number(token());
  if (!Number.isInteger(width) || !Number.isInteger(height) || width <= 0 || height <= 0) {
    throw new PpmFormatError(`bad PPM dimensions ${width}x${height}`);
  }
  if (maxval !== 255) throw new PpmFormatError(`unsupported maxval ${maxval}`);
  pos += 1; // single whitespace byte after the header

  const expected = width * height * 3;
  if (bytes.length - pos < expected) {
    throw new PpmFormatError(
      `pixel data truncated: need ${expected} bytes, have ${bytes.length - pos}`,
    );
  }
  const rgba = new Uint8ClampedArray(width * height * 4);
  for (let i = 0; i < width * height; i += 1) {
    rgba[4 * i] = bytes[pos + 3 * i];
    rgba[4 * i + 1] = bytes[pos + 3 * i + 1];
    rgba[4 * i + 2] = bytes[pos + 3 * i + 2];
    rgba[4 * i + 3] = 255;
  }
  return { width, height, rgba };
}
