// Minimal RIFF/WAVE reader: enough to sniff the sample rate before upload
// (the neural engine only runs at 44100 Hz) and to draw the input waveform.
// Rendering stays on the server; this never touches the samples otherwise.

export class WavParseError extends Error {
  constructor(message: string) {
    super(message);
    this.name = "WavParseError";
  }
}

export interface WavInfo {
  sampleRate: number;
  channels: number;
  bitsPerSample: number;
  format: "pcm16" | "float32";
  frames: number;
  seconds: number;
  dataOffset: number;
  dataLength: number;
}

const FORMAT_PCM = 1;
const FORMAT_FLOAT = 3;

function fourcc(view: DataView, offset: number): string {
  return String.fromCharCode(
    view.getUint8(offset),
    view.getUint8(offset + 1),
    view.getUint8(offset + 2),
    view.getUint8(offset + 3),
  );
}

export function isWav(buf: ArrayBuffer): boolean {
  if (buf.byteLength < 12) return false;
  const view = new DataView(buf);
  return fourcc(view, 0) === "RIFF" && fourcc(view, 8) === "WAVE";
}

/** Walk the chunk list and return the stream layout. Throws WavParseError. */
export function parseWav(buf: ArrayBuffer): WavInfo {
  if (!isWav(buf)) throw new WavParseError("not a RIFF/WAVE file");
  const view = new DataView(buf);

  let offset = 12;
  let fmt: { code: number; channels: number; rate: number; bits: number } | null = null;
  let dataOffset = -1;
  let dataLength = 0;
  while (offset + 8 <= buf.byteLength) {
    const id = fourcc(view, offset);
    const size = view.getUint32(offset + 4, true);
    const body = offset + 8;
    if (body + size > buf.byteLength) {
      throw new WavParseError(`truncated ${id.trim()} chunk`);
    }
    if (id === "fmt ") {
      if (size < 16) throw new WavParseError("fmt chunk too short");
      fmt = {
        code: view.getUint16(body, true),
        channels: view.getUint16(body + 2, true),
        rate: view.getUint32(body + 4, true),
        bits: view.getUint16(body + 14, true),
      };
    } else if (id === "data") {
      dataOffset = body;
      dataLength = size;
    }
    // chunks are word-aligned; odd sizes carry a pad byte
    offset = body + size + (size & 1);
  }

  if (fmt === null) throw new WavParseError("missing fmt chunk");
  if (dataOffset < 0) throw new WavParseError("missing data chunk");
  if (fmt.channels < 1) throw new WavParseError("no channels");

  let format: WavInfo["format"];
  if (fmt.code === FORMAT_PCM && fmt.bits === 16) format = "pcm16";
  else if (fmt.code === FORMAT_FLOAT && fmt.bits === 32) format = "float32";
  else {
    throw new WavParseError(
      `unsupported encoding (format ${fmt.code}, ${fmt.bits} bits)`,
    );
  }

  const bytesPerFrame = (fmt.bits / 8) * fmt.channels;
  const frames = Math.floor(dataLength / bytesPerFrame);
  return {
    sampleRate: fmt.rate,
    channels: fmt.channels,
    bitsPerSample: fmt.bits,
    format,
    frames,
    seconds: frames / fmt.rate,
    dataOffset,
    dataLength,
  };
}

/** Decode to mono float samples (channels averaged), for display only. */
export function decodeSamples(buf: ArrayBuffer): Float32Array {
  const info = parseWav(buf);
  const view = new DataView(buf);
  const out = new Float32Array(info.frames);
  const ch = info.channels;
  if (info.format === "pcm16") {
    for (let i = 0; i < info.frames; i++) {
      let acc = 0;
      for (let c = 0; c < ch; c++) {
        acc += view.getInt16(info.dataOffset + (i * ch + c) * 2, true);
      }
      out[i] = acc / ch / 32768;
    }
  } else {
    for (let i = 0; i < info.frames; i++) {
      let acc = 0;
      for (let c = 0; c < ch; c++) {
        acc += view.getFloat32(info.dataOffset + (i * ch + c) * 4, true);
      }
      out[i] = acc / ch;
    }
  }
  return out;
}
