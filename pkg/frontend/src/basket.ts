// Selection basket: attribute sets picked from the table for re-checking
// with the verifier tool. Exports one "{i, j, k}" set per line, the
// format the CLI's --sets-file flag reads back.

export class Basket {
  private sets = new Map<string, number[]>();

  key(attrs: number[]): string {
    return [...attrs].sort((a, b) => a - b).join(",");
  }

  toggle(attrs: number[]): void {
    const key = this.key(attrs);
    if (this.sets.has(key)) {
      this.sets.delete(key);
    } else {
      this.sets.set(key, [...attrs].sort((a, b) => a - b));
    }
  }

  has(attrs: number[]): boolean {
    return this.sets.has(this.key(attrs));
  }

  get size(): number {
    return this.sets.size;
  }

  clear(): void {
    this.sets.clear();
  }

  list(): number[][] {
    return [...this.sets.values()];
  }

  exportText(): string {
    return this.list()
      .map((attrs) => `{${attrs.join(", ")}}`)
      .join("\n");
  }
}

export function downloadText(filename: string, text: string): void {
  const blob = new Blob([text], { type: "text/plain" });
  const url = URL.createObjectURL(blob);
  const a = document.createElement("a");
  a.href = url;
  a.download = filename;
  a.click();
  URL.revokeObjectURL(url);
}
