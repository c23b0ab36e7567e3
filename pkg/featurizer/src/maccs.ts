/**
 * MACCS key fingerprints via the RDKit WASM build.
 *
 * RDKit returns 167 bits with bit 0 unused; we drop it and expose the 166
 * standard keys. Unparseable SMILES yield null so callers can count drops.
 */
import type { JSMol, RDKitLoader, RDKitModule } from "@rdkit/rdkit";

// The CJS export is the loader function; the shipped typings only declare it
// as a browser global, hence the cast.
// eslint-disable-next-line @typescript-eslint/no-var-requires
const initRDKitModule = require("@rdkit/rdkit") as RDKitLoader;

export const MACCS_BITS = 166;

// get_maccs_fp exists in the WASM build but is missing from the typings
interface JSMolWithMaccs extends JSMol {
  get_maccs_fp(): string;
}

let rdkitPromise: Promise<RDKitModule> | null = null;

export function getRDKit(): Promise<RDKitModule> {
  if (!rdkitPromise) {
    rdkitPromise = initRDKitModule();
  }
  return rdkitPromise;
}

export async function smilesToMaccsBits(smiles: string): Promise<Uint8Array | null> {
  const rdkit = await getRDKit();
  let mol: JSMol | null = null;
  try {
    mol = rdkit.get_mol(smiles);
  } catch {
    return null;
  }
  if (!mol) return null;
  try {
    const raw = (mol as JSMolWithMaccs).get_maccs_fp(); // 167 bits, bit 0 is a dummy
    if (raw.length !== MACCS_BITS + 1) {
      throw new Error(`unexpected MACCS length ${raw.length}`);
    }
    const bits = new Uint8Array(MACCS_BITS);
    for (let i = 0; i < MACCS_BITS; i++) {
      bits[i] = raw.charCodeAt(i + 1) === 49 ? 1 : 0;
    }
    return bits;
  } finally {
    mol.delete();
  }
}
